import numpy as np
import pytest
from hypothesis import settings

from voxevo.genome import EVO, EVO_DEVO, Gene, Genome, NUM_GENES
from voxevo.physics import SimConfig

# no wall-clock deadline (the box may be fully loaded by the desk experiment)
# and derandomized examples, so the suite is reproducible end to end
settings.register_profile("artifact", deadline=None, derandomize=True)
settings.load_profile("artifact")


@pytest.fixture
def desk_sim() -> SimConfig:
    """Short, coarse config used by simulation-heavy unit tests."""
    return SimConfig(dt=5e-4, eval_duration=2.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def uniform_genome(length: float = 1.0, mode: str = EVO) -> Genome:
    return Genome(tuple(Gene(length, length) for _ in range(NUM_GENES)), mode)


def make_genome(pairs, mode=EVO_DEVO) -> Genome:
    return Genome(tuple(Gene(s0, s1) for s0, s1 in pairs), mode)

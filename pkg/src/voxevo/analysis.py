"""Post-hoc statistics over run records: random-search baselines, development
window metrics, lineage traces, mutation impacts, rank tests and sweeps."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import fitness as fitness_mod
from .evolution import LineageEntry, MutationConfig, run_evolution
from .genome import MODES, random_genome, total_window  # noqa: F401  (total_window is public here)
from .physics import SimConfig

# Exact Mann-Whitney enumeration is used below this many pooled arrangements;
# beyond it the tie-corrected normal approximation takes over (fine for n >= 8).
EXACT_MWU_LIMIT = 20000


def mutation_impact(parent_fitness: float, child_fitness: float) -> float:
    """Relative fitness change child/parent - 1; defined for positive fitnesses."""
    if parent_fitness <= 0 or child_fitness <= 0:
        raise ValueError("mutation impact requires positive parent and child fitness")
    return child_fitness / parent_fitness - 1.0


@dataclass
class EarlyLateSplit:
    """Mutation impacts split by whether the mutation touched starting lengths
    (early, any s0 change) or only final lengths (late)."""

    early: np.ndarray
    late: np.ndarray

    @property
    def mean_early(self) -> float | None:
        return float(self.early.mean()) if len(self.early) else None

    @property
    def mean_late(self) -> float | None:
        return float(self.late.mean()) if len(self.late) else None


def early_late_split(entries: list[LineageEntry]) -> EarlyLateSplit:
    """Collect impacts over parent-child pairs with positive fitnesses."""
    by_id = {e.id: e for e in entries}
    early, late = [], []
    for child in entries:
        if child.parent_id is None:
            continue
        parent = by_id.get(child.parent_id)
        if parent is None:
            raise ValueError(f"lineage references missing parent id {child.parent_id}")
        if parent.fitness <= 0 or child.fitness <= 0:
            continue
        m = mutation_impact(parent.fitness, child.fitness)
        if child.mutated_s0:
            early.append(m)
        elif child.mutated_s1:
            late.append(m)
    return EarlyLateSplit(np.asarray(early), np.asarray(late))


def _midranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    # rank-sum form of "number of (a, b) pairs where a wins, ties half"
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    r_a = ranks[: len(a)].sum()
    return r_a - len(a) * (len(a) + 1) / 2.0


def mann_whitney_u(sample_a, sample_b) -> tuple[float, float]:
    """Rank-sum U for sample_a plus a two-sided p value.

    Small samples get an exact permutation p over all rank configurations;
    larger ones the tie-corrected normal approximation with continuity
    correction (a good approximation from around n = 8 per side).
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be non-empty")
    u = _u_statistic(a, b)
    if math.comb(len(a) + len(b), len(a)) <= EXACT_MWU_LIMIT:
        return u, _exact_p(a, b, u)
    n1, n2 = len(a), len(b)
    n = n1 + n2
    pooled = np.concatenate([a, b])
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = (counts**3 - counts).sum() / (n * (n - 1))
    sigma_sq = n1 * n2 / 12.0 * (n + 1 - tie_term)
    if sigma_sq <= 0:
        return u, 1.0
    mean = n1 * n2 / 2.0
    z = (abs(u - mean) - 0.5) / math.sqrt(sigma_sq)
    if z < 0:
        z = 0.0
    return u, min(1.0, math.erfc(z / math.sqrt(2.0)))


def _exact_p(a: np.ndarray, b: np.ndarray, u_obs: float) -> float:
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    n1, n2 = len(a), len(b)
    mean = n1 * n2 / 2.0
    dev = abs(u_obs - mean)
    hits = total = 0
    offset = n1 * (n1 + 1) / 2.0
    for combo in itertools.combinations(range(n1 + n2), n1):
        u = sum(ranks[i] for i in combo) - offset
        total += 1
        if abs(u - mean) >= dev - 1e-12:
            hits += 1
    return hits / total


def mann_whitney_exact(sample_a, sample_b) -> tuple[float, float]:
    """Brute-force permutation version; the oracle for small samples."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be non-empty")
    u = _u_statistic(a, b)
    return u, _exact_p(a, b, u)


def spearman(x, y) -> float:
    """Spearman rank correlation via midranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y) or len(x) < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    rx = _midranks(x)
    ry = _midranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt((rx**2).sum() * (ry**2).sum())
    if denom == 0:
        return 0.0
    return float((rx * ry).sum() / denom)


def random_search(n: int, mode: str, config: SimConfig, seed: int, evaluate=None) -> np.ndarray:
    """Fitness of n random genomes of one mode (the pre-evolution baseline)."""
    if n <= 0:
        raise ValueError("n must be positive")
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    genomes = [random_genome(mode, rng) for _ in range(n)]
    if evaluate is None:
        evaluate = lambda gs: [fitness_mod.evaluate(g, config).fitness for g in gs]
    return np.asarray(evaluate(genomes), dtype=np.float64)


def fitness_histogram(samples: dict[str, np.ndarray], bins: int = 50):
    """Equal-width bins over the pooled range, shared between groups."""
    pooled = np.concatenate(list(samples.values()))
    edges = np.histogram_bin_edges(pooled, bins=bins)
    return {mode: np.histogram(vals, bins=edges)[0] for mode, vals in samples.items()}, edges


def lineage_extract(entries: list[LineageEntry], champion_id: int) -> list[LineageEntry]:
    """Ancestor path from the oldest ancestor down to the champion."""
    by_id = {e.id: e for e in entries}
    if champion_id not in by_id:
        raise ValueError(f"champion id {champion_id} not found in records")
    path = []
    seen = set()
    current = by_id[champion_id]
    while True:
        if current.id in seen:
            raise ValueError(f"lineage cycle at id {current.id}")
        seen.add(current.id)
        path.append(current)
        if current.parent_id is None:
            break
        nxt = by_id.get(current.parent_id)
        if nxt is None:
            raise ValueError(f"lineage references missing parent id {current.parent_id}")
        current = nxt
    path.reverse()
    return path


@dataclass
class SweepCell:
    rate: float
    mode: str
    run_index: int
    seed: int
    champion_fitness: float


def derive_seed(*entropy: int) -> int:
    """Stable child seed from a tuple of integers."""
    return int(np.random.SeedSequence(list(entropy)).generate_state(1, np.uint32)[0])


def sweep(
    rates,
    runs_per_rate: int,
    modes,
    size: int,
    generations: int,
    mutation_sigma: float,
    base_seed: int,
    evaluate_population,
    out_dir=None,
) -> list[SweepCell]:
    """Champion fitness per (mutation rate, mode, run) grid cell.

    When out_dir is given the cells are also written as the sweep figure CSV
    and plot."""
    cells = []
    for i_rate, rate in enumerate(rates):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"mutation rate {rate} outside [0, 1]")
        for i_mode, mode in enumerate(modes):
            for i_run in range(runs_per_rate):
                seed = derive_seed(base_seed, i_rate, i_mode, i_run)
                record = run_evolution(
                    size,
                    generations,
                    mode,
                    MutationConfig(sigma=mutation_sigma, per_voxel_prob=rate),
                    seed,
                    evaluate_population,
                )
                cells.append(SweepCell(rate, mode, i_run, seed, record.champion().best_fitness))
    if out_dir is not None:
        from .figures import write_fig8_sweep

        write_fig8_sweep(cells, out_dir, f"sweep base_seed={base_seed}")
    return cells

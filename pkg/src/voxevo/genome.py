"""Bilaterally symmetric voxel-length encoding with linear lifetime growth.

A robot is a 4x4x3 grid of voxels. Each gene holds a starting and a final
resting length for one mirror pair of voxels; the resting length moves
linearly between them over the robot's lifetime, and a global sinusoid
actuates the voxel volume around that moving baseline. Static ("evo")
robots are the special case where start and final lengths coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LENGTH_MIN = 0.25
LENGTH_MAX = 1.75

GRID_X, GRID_Y, GRID_Z = 4, 4, 3
NUM_VOXELS = GRID_X * GRID_Y * GRID_Z  # 48
NUM_GENES = NUM_VOXELS // 2  # 24, one gene per mirror pair

EVO = "evo"
EVO_DEVO = "evo-devo"
MODES = (EVO, EVO_DEVO)


def voxel_index(x: int, y: int, z: int) -> int:
    """Linear voxel id, x fastest."""
    return x + GRID_X * (y + GRID_Y * z)


def _gene_slots() -> list[tuple[int, int]]:
    # Gene k covers the mirror pair (voxel on positive-x half, its x-reflection).
    # Order is row-major over (y, z, x >= half); fixed so runs are reproducible.
    slots = []
    half = GRID_X // 2
    for y in range(GRID_Y):
        for z in range(GRID_Z):
            for x in range(half, GRID_X):
                slots.append((voxel_index(x, y, z), voxel_index(GRID_X - 1 - x, y, z)))
    return slots


GENE_TO_VOXELS: tuple[tuple[int, int], ...] = tuple(_gene_slots())

VOXEL_TO_GENE = np.empty(NUM_VOXELS, dtype=np.int32)
for _k, (_a, _b) in enumerate(GENE_TO_VOXELS):
    VOXEL_TO_GENE[_a] = _k
    VOXEL_TO_GENE[_b] = _k


@dataclass(frozen=True)
class Gene:
    """Starting and final resting length of one mirror pair of voxels."""

    s0: float
    s1: float

    def __post_init__(self):
        if not (LENGTH_MIN <= self.s0 <= LENGTH_MAX and LENGTH_MIN <= self.s1 <= LENGTH_MAX):
            raise ValueError(
                f"gene lengths must lie in [{LENGTH_MIN}, {LENGTH_MAX}], got ({self.s0}, {self.s1})"
            )


@dataclass(frozen=True)
class ActuationParams:
    """Global volumetric actuation: amplitude fraction u, period w seconds."""

    u: float = 0.20
    w: float = 0.25

    def __post_init__(self):
        if self.u < 0.0 or self.w <= 0.0:
            raise ValueError(f"need u >= 0 and w > 0, got u={self.u}, w={self.w}")


@dataclass(frozen=True)
class Genome:
    genes: tuple[Gene, ...]
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {MODES}")
        if len(self.genes) != NUM_GENES:
            raise ValueError(f"expected {NUM_GENES} genes, got {len(self.genes)}")
        if self.mode == EVO and any(g.s0 != g.s1 for g in self.genes):
            raise ValueError("evo genomes require s0 == s1 in every gene")


def rest_length(gene: Gene, t: float, tau: float) -> float:
    """Developmental resting length at time t of a lifetime tau (linear ramp)."""
    if not 0.0 <= t <= tau:
        raise ValueError(f"t={t} outside lifetime [0, {tau}]")
    return gene.s0 + (t / tau) * (gene.s1 - gene.s0)


def damping_factor(s: float) -> float:
    """Actuation limiter: 1 above unit length, linear to 0 at the lower bound."""
    if s >= 1.0:
        return 1.0
    return (4.0 * s - 1.0) / 3.0


def actuation(t: float, params: ActuationParams) -> float:
    """Raw actuation signal u * sin(2*pi*t / w)."""
    return params.u * math.sin(2.0 * math.pi * t / params.w)


def current_length(gene: Gene, t: float, tau: float, params: ActuationParams) -> float:
    """Actuated voxel length: resting length plus damped sinusoidal offset."""
    r = rest_length(gene, t, tau)
    return r + actuation(t, params) * damping_factor(r)


def genes_to_arrays(genes: tuple[Gene, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Gene tuple -> (s0, s1) float arrays in gene order."""
    s0 = np.fromiter((g.s0 for g in genes), dtype=np.float64, count=len(genes))
    s1 = np.fromiter((g.s1 for g in genes), dtype=np.float64, count=len(genes))
    return s0, s1


def current_lengths_array(
    s0: np.ndarray, s1: np.ndarray, t: float, tau: float, params: ActuationParams
) -> np.ndarray:
    """Vectorized current_length over gene arrays; same formulas as the scalar op."""
    r = s0 + (t / tau) * (s1 - s0)
    d = np.where(r >= 1.0, 1.0, (4.0 * r - 1.0) / 3.0)
    a = params.u * math.sin(2.0 * math.pi * t / params.w)
    return r + a * d


def expand_symmetric(genome: Genome) -> tuple[Gene, ...]:
    """Map the 24 genes onto 48 voxel slots, mirroring across the x origin."""
    out: list[Gene | None] = [None] * NUM_VOXELS
    for k, (a, b) in enumerate(GENE_TO_VOXELS):
        out[a] = genome.genes[k]
        out[b] = genome.genes[k]
    return tuple(out)  # type: ignore[arg-type]


def expand_arrays(genes: tuple[Gene, ...]) -> tuple[np.ndarray, np.ndarray]:
    """24 genes -> per-voxel (s0, s1) arrays of length 48."""
    s0g, s1g = genes_to_arrays(genes)
    return s0g[VOXEL_TO_GENE], s1g[VOXEL_TO_GENE]


def random_genome(mode: str, rng: np.random.Generator) -> Genome:
    """Draw each endpoint uniformly from the length range; evo ties s1 to s0."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    genes = []
    for _ in range(NUM_GENES):
        s0 = rng.uniform(LENGTH_MIN, LENGTH_MAX)
        s1 = s0 if mode == EVO else rng.uniform(LENGTH_MIN, LENGTH_MAX)
        genes.append(Gene(s0, s1))
    return Genome(tuple(genes), mode)


def total_window(genome: Genome) -> float:
    """Summed |s1 - s0| over all 48 voxels (each gene counts for its mirror pair)."""
    return 2.0 * sum(abs(g.s1 - g.s0) for g in genome.genes)


def genome_to_text(genome: Genome) -> str:
    """Serialize as a mode header plus one 'index s0 s1' line per gene."""
    lines = [f"mode {genome.mode}"]
    for k, g in enumerate(genome.genes):
        lines.append(f"{k} {g.s0:.17g} {g.s1:.17g}")
    return "\n".join(lines) + "\n"


def genome_from_text(text: str) -> Genome:
    """Parse genome_to_text output; round-trips bit-exactly."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("mode "):
        raise ValueError("genome text must start with a 'mode <name>' line")
    mode = lines[0].split(maxsplit=1)[1].strip()
    genes: list[Gene] = []
    for expected, line in enumerate(lines[1:]):
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"bad gene line {line!r}")
        idx = int(parts[0])
        if idx != expected:
            raise ValueError(f"gene index {idx} out of order (expected {expected})")
        genes.append(Gene(float(parts[1]), float(parts[2])))
    return Genome(tuple(genes), mode)

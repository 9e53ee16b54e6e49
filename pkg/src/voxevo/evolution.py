"""Age-fitness Pareto search over voxel genomes.

Each generation every member spawns one mutated child, one fresh random
individual is injected, all new candidates are evaluated, and survivors are
chosen by repeatedly peeling nondominated fronts under (maximize fitness,
minimize age). Children inherit their parent's age; survivors age by one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .genome import (
    EVO,
    Gene,
    Genome,
    LENGTH_MAX,
    LENGTH_MIN,
    MODES,
    random_genome,
    total_window,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MutationConfig:
    sigma: float = 0.75
    per_voxel_prob: float = 0.5

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if not 0.0 <= self.per_voxel_prob <= 1.0:
            raise ValueError("per_voxel_prob must lie in [0, 1]")


@dataclass
class Individual:
    id: int
    parent_id: int | None
    genome: Genome
    age: int = 0
    fitness: float | None = None
    birth_generation: int = 0
    # True when the mutation that created this individual changed any
    # starting / final length (early / late developmental change).
    mutated_s0: bool = False
    mutated_s1: bool = False


@dataclass
class Population:
    members: list[Individual]
    generation: int
    size: int
    mode: str
    rng_seed: int
    next_id: int


def _clamp(v: float) -> float:
    return min(max(v, LENGTH_MIN), LENGTH_MAX)


def mutate(
    parent: Individual,
    config: MutationConfig,
    rng: np.random.Generator,
    child_id: int,
    birth_generation: int,
) -> Individual:
    """Create the mutated child of one parent.

    Evo: each gene's single length gets a normal(0, sigma) bump with
    probability per_voxel_prob. Evo-devo: first pick which endpoints to
    mutate (a fair coin per endpoint; if both miss, one more coin picks one,
    giving both 25% and each alone 37.5%), then bump the picked endpoint(s)
    gene by gene at the same per-gene probability. Values clamp to the legal
    length range; the child keeps its parent's age.
    """
    mode = parent.genome.mode
    p = config.per_voxel_prob
    if mode == EVO:
        pick_s0 = pick_s1 = True
    else:
        pick_s0 = rng.random() < 0.5
        pick_s1 = rng.random() < 0.5
        if not (pick_s0 or pick_s1):
            if rng.random() < 0.5:
                pick_s0 = True
            else:
                pick_s1 = True

    genes = []
    for g in parent.genome.genes:
        if rng.random() < p:
            if mode == EVO:
                s = _clamp(g.s0 + rng.normal(0.0, config.sigma))
                genes.append(Gene(s, s))
            else:
                s0 = _clamp(g.s0 + rng.normal(0.0, config.sigma)) if pick_s0 else g.s0
                s1 = _clamp(g.s1 + rng.normal(0.0, config.sigma)) if pick_s1 else g.s1
                genes.append(Gene(s0, s1))
        else:
            genes.append(g)

    child_genome = Genome(tuple(genes), mode)
    changed_s0 = any(c.s0 != o.s0 for c, o in zip(genes, parent.genome.genes))
    changed_s1 = any(c.s1 != o.s1 for c, o in zip(genes, parent.genome.genes))
    return Individual(
        id=child_id,
        parent_id=parent.id,
        genome=child_genome,
        age=parent.age,
        birth_generation=birth_generation,
        mutated_s0=changed_s0,
        mutated_s1=changed_s1,
    )


def pareto_dominates(a: Individual, b: Individual) -> bool:
    """a dominates b under (fitness max, age min) with at least one strict."""
    if a.fitness is None or b.fitness is None:
        raise ValueError("cannot compare unevaluated individuals")
    return (
        a.fitness >= b.fitness
        and a.age <= b.age
        and (a.fitness > b.fitness or a.age < b.age)
    )


def nondominated(candidates: list[Individual]) -> list[Individual]:
    return [c for c in candidates if not any(pareto_dominates(o, c) for o in candidates)]


def afpo_select(candidates: list[Individual], size: int) -> list[Individual]:
    """Peel nondominated fronts until full; the overflowing front is cut by
    highest fitness, then lower age, then lower id. Duplicates are kept."""
    survivors: list[Individual] = []
    pool = list(candidates)
    while len(survivors) < size and pool:
        front = nondominated(pool)
        if len(survivors) + len(front) <= size:
            survivors.extend(front)
            front_ids = {c.id for c in front}
            pool = [c for c in pool if c.id not in front_ids]
        else:
            front.sort(key=lambda c: (-c.fitness, c.age, c.id))
            survivors.extend(front[: size - len(survivors)])
            break
    return sorted(survivors, key=lambda c: c.id)


def initial_population(size: int, mode: str, seed: int) -> tuple[Population, np.random.Generator]:
    """Fresh random population plus the run's generator (seeded once per run)."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    members = [
        Individual(id=i, parent_id=None, genome=random_genome(mode, rng))
        for i in range(size)
    ]
    return Population(members, 0, size, mode, seed, size), rng


def generation_step(
    pop: Population,
    evaluate_population,
    mutation: MutationConfig,
    rng: np.random.Generator,
) -> tuple[Population, list[Individual]]:
    """One AFPO generation: double by mutation, inject one random individual,
    evaluate the newcomers, select survivors, then age them by one.

    Returns the next population and every newcomer (kept or culled), so
    callers can log complete lineages."""
    if any(m.fitness is None for m in pop.members):
        raise ValueError("all members must be evaluated before stepping")
    next_id = pop.next_id
    newcomers: list[Individual] = []
    for member in pop.members:
        newcomers.append(mutate(member, mutation, rng, next_id, pop.generation + 1))
        next_id += 1
    injected = Individual(
        id=next_id,
        parent_id=None,
        genome=random_genome(pop.mode, rng),
        age=0,
        birth_generation=pop.generation + 1,
    )
    next_id += 1
    newcomers.append(injected)

    evaluate_population(newcomers)
    missing = [c.id for c in newcomers if c.fitness is None]
    if missing:
        raise ValueError(f"evaluator left individuals unevaluated: {missing}")

    survivors = afpo_select(pop.members + newcomers, pop.size)
    for ind in survivors:
        ind.age += 1
    new_pop = Population(
        survivors, pop.generation + 1, pop.size, pop.mode, pop.rng_seed, next_id
    )
    return new_pop, newcomers


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_id: int
    best_window: float


@dataclass
class LineageEntry:
    id: int
    parent_id: int | None
    birth_generation: int
    age_at_end: int
    fitness: float
    window: float
    mode: str
    mutated_s0: bool
    mutated_s1: bool
    genes: tuple[Gene, ...]


@dataclass
class RunRecord:
    seed: int
    mode: str
    generations: list[GenerationStats] = field(default_factory=list)
    lineage: list[LineageEntry] = field(default_factory=list)

    def champion(self) -> GenerationStats:
        return self.generations[-1]


def _stats_for(pop: Population) -> GenerationStats:
    best = max(pop.members, key=lambda m: (m.fitness, -m.id))
    mean = sum(m.fitness for m in pop.members) / len(pop.members)
    return GenerationStats(
        pop.generation, best.fitness, mean, best.id, total_window(best.genome)
    )


def run_evolution(
    size: int,
    generations: int,
    mode: str,
    mutation: MutationConfig,
    rng_seed: int,
    evaluate_population,
    progress_every: int = 0,
) -> RunRecord:
    """Run one full evolutionary search and log everything it ever created.

    evaluate_population(list) must fill in .fitness for every individual it is
    given; it may do so in parallel, since candidates are independent.
    """
    pop, rng = initial_population(size, mode, rng_seed)
    evaluate_population(pop.members)
    everyone: dict[int, Individual] = {m.id: m for m in pop.members}
    record = RunRecord(seed=rng_seed, mode=mode)
    record.generations.append(_stats_for(pop))
    for gen in range(1, generations + 1):
        pop, newcomers = generation_step(pop, evaluate_population, mutation, rng)
        for ind in newcomers:
            everyone[ind.id] = ind
        record.generations.append(_stats_for(pop))
        if progress_every and gen % progress_every == 0:
            log.info(
                "seed %d gen %d best %.4f", rng_seed, gen, record.generations[-1].best_fitness
            )
    record.lineage = [
        LineageEntry(
            ind.id,
            ind.parent_id,
            ind.birth_generation,
            ind.age,
            ind.fitness,
            total_window(ind.genome),
            ind.genome.mode,
            ind.mutated_s0,
            ind.mutated_s1,
            ind.genome.genes,
        )
        for ind in sorted(everyone.values(), key=lambda i: i.id)
    ]
    return record

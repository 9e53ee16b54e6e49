import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voxevo import analysis
from voxevo.analysis import (
    EarlyLateSplit,
    early_late_split,
    lineage_extract,
    mann_whitney_exact,
    mann_whitney_u,
    mutation_impact,
    random_search,
    spearman,
    sweep,
)
from voxevo.evolution import LineageEntry, MutationConfig
from voxevo.genome import EVO, EVO_DEVO, Gene, NUM_GENES
from voxevo.physics import SimConfig


# ---------------------------------------------------------------------------
# independent Mann-Whitney oracle: U by direct pair counting, p by exhaustive
# permutation of the pooled values (no shared code with the package)
# ---------------------------------------------------------------------------

def oracle_u(a, b) -> float:
    u = 0.0
    for x in a:
        for y in b:
            if x > y:
                u += 1.0
            elif x == y:
                u += 0.5
    return u


def oracle_p(a, b) -> float:
    pooled = list(a) + list(b)
    n1 = len(a)
    mean = n1 * len(b) / 2.0
    dev = abs(oracle_u(a, b) - mean)
    hits = total = 0
    for combo in itertools.combinations(range(len(pooled)), n1):
        chosen = [pooled[i] for i in combo]
        rest = [pooled[i] for i in range(len(pooled)) if i not in combo]
        total += 1
        if abs(oracle_u(chosen, rest) - mean) >= dev - 1e-12:
            hits += 1
    return hits / total


def fake_entry(id, parent_id, fitness, w=0.0, s0=False, s1=False, mode=EVO_DEVO):
    genes = tuple(Gene(1.0, 1.0) for _ in range(NUM_GENES))
    return LineageEntry(id, parent_id, 0, 0, fitness, w, mode, s0, s1, genes)


class TestMutationImpact:
    def test_neutral(self):
        assert mutation_impact(3.0, 3.0) == 0.0

    def test_halved(self):
        assert mutation_impact(4.0, 2.0) == pytest.approx(-0.5, rel=1e-12)

    def test_improved(self):
        assert mutation_impact(2.0, 3.0) == pytest.approx(0.5, rel=1e-12)

    def test_requires_positive(self):
        with pytest.raises(ValueError):
            mutation_impact(0.0, 1.0)
        with pytest.raises(ValueError):
            mutation_impact(1.0, -2.0)

    @given(fp=st.floats(0.01, 100), fc=st.floats(0.01, 100), c=st.floats(0.01, 50))
    def test_scale_invariance(self, fp, fc, c):
        assert mutation_impact(c * fp, c * fc) == pytest.approx(
            mutation_impact(fp, fc), rel=1e-9
        )


class TestEarlyLateSplit:
    def test_neutral_population(self):
        entries = [fake_entry(0, None, 1.0)]
        entries += [fake_entry(i, 0, 1.0, s0=(i % 2 == 1), s1=(i % 2 == 0)) for i in range(1, 9)]
        split = early_late_split(entries)
        assert split.mean_early == 0.0
        assert split.mean_late == 0.0

    def test_single_early_mutation(self):
        entries = [fake_entry(0, None, 1.0), fake_entry(1, 0, 0.71, s0=True)]
        split = early_late_split(entries)
        assert split.mean_early == pytest.approx(-0.29, rel=1e-12)
        assert split.mean_late is None

    def test_no_positive_pairs(self):
        entries = [fake_entry(0, None, 0.0), fake_entry(1, 0, 0.5, s1=True)]
        split = early_late_split(entries)
        assert split.mean_early is None and split.mean_late is None

    def test_early_takes_precedence_over_late(self):
        # a mutation touching both endpoints counts as early
        entries = [fake_entry(0, None, 2.0), fake_entry(1, 0, 1.0, s0=True, s1=True)]
        split = early_late_split(entries)
        assert split.mean_early == pytest.approx(-0.5)
        assert split.mean_late is None


class TestMannWhitney:
    def test_identical_samples(self):
        u, p = mann_whitney_u([1.0, 1.0, 1.0], [1.0, 1.0, 1.0])
        assert p == pytest.approx(1.0, abs=0.05)

    def test_complete_separation(self):
        u, p = mann_whitney_u([1, 2, 3], [10, 11, 12])
        assert u == 0.0

    def test_tied_pairs_midranks(self):
        u, p = mann_whitney_u([1, 2], [1, 2])
        assert u == 2.0

    def test_u_matches_oracle_on_random_samples(self, rng):
        for _ in range(60):
            n1 = int(rng.integers(1, 7))
            n2 = int(rng.integers(1, 7))
            a = list(rng.integers(0, 5, n1).astype(float))
            b = list(rng.integers(0, 5, n2).astype(float))
            u, p = mann_whitney_u(a, b)
            assert u == pytest.approx(oracle_u(a, b), abs=1e-9)
            assert p == pytest.approx(oracle_p(a, b), abs=0.05)

    def test_exact_variant_matches_oracle(self, rng):
        for _ in range(20):
            a = list(rng.normal(size=4))
            b = list(rng.normal(size=5))
            u, p = mann_whitney_exact(a, b)
            assert u == pytest.approx(oracle_u(a, b), abs=1e-9)
            assert p == pytest.approx(oracle_p(a, b), abs=1e-12)

    def test_normal_approximation_against_exact_medium_n(self, rng):
        # large-sample path vs exhaustive enumeration at the crossover size
        a = list(rng.normal(size=9))
        b = list(rng.normal(size=9))
        u_apx, p_apx = mann_whitney_u(a, b)  # C(18,9) > limit -> normal path
        u_ex, p_ex = mann_whitney_exact(a, b)
        assert u_apx == u_ex
        assert p_apx == pytest.approx(p_ex, abs=0.05)

    @given(
        a=st.lists(st.integers(0, 6), min_size=1, max_size=10),
        b=st.lists(st.integers(0, 6), min_size=1, max_size=10),
    )
    @settings(max_examples=60)
    def test_symmetry(self, a, b):
        ua, pa = mann_whitney_u(a, b)
        ub, pb = mann_whitney_u(b, a)
        assert ua + ub == pytest.approx(len(a) * len(b), abs=1e-9)
        assert pa == pytest.approx(pb, abs=1e-9)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            mann_whitney_u([], [1.0])


class TestSpearman:
    def test_perfect_monotone(self):
        assert spearman([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
        assert spearman([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_matches_pearson_of_ranks(self, rng):
        x = rng.normal(size=30)
        y = rng.normal(size=30)
        rho = spearman(x, y)
        rx = np.argsort(np.argsort(x)).astype(float)
        ry = np.argsort(np.argsort(y)).astype(float)
        expected = np.corrcoef(rx, ry)[0, 1]
        assert rho == pytest.approx(expected, abs=1e-12)


class TestLineageExtract:
    def test_root_champion(self):
        entries = [fake_entry(0, None, 1.0)]
        assert [e.id for e in lineage_extract(entries, 0)] == [0]

    def test_chain_order(self):
        entries = [fake_entry(0, None, 1.0)]
        for i in range(1, 5):
            entries.append(fake_entry(i, i - 1, 1.0))
        path = lineage_extract(entries, 4)
        assert [e.id for e in path] == [0, 1, 2, 3, 4]

    def test_no_duplicate_ids(self):
        entries = [fake_entry(0, None, 1.0), fake_entry(1, 0, 1.0), fake_entry(2, 1, 1.0)]
        path = lineage_extract(entries, 2)
        ids = [e.id for e in path]
        assert len(ids) == len(set(ids))

    def test_missing_parent_named(self):
        entries = [fake_entry(3, 99, 1.0)]
        with pytest.raises(ValueError, match="99"):
            lineage_extract(entries, 3)

    def test_missing_champion(self):
        with pytest.raises(ValueError, match="7"):
            lineage_extract([fake_entry(0, None, 1.0)], 7)


class TestRandomSearch:
    def test_determinism_with_fake_evaluator(self):
        cfg = SimConfig(dt=5e-4, eval_duration=2.0)
        fake = lambda genomes: [float(g.genes[0].s0) for g in genomes]
        a = random_search(20, EVO_DEVO, cfg, 5, evaluate=fake)
        b = random_search(20, EVO_DEVO, cfg, 5, evaluate=fake)
        assert np.array_equal(a, b)

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            random_search(0, EVO, SimConfig(), 1)

    def test_histogram_shares_bins(self):
        samples = {"a": np.array([0.0, 0.5, 1.0]), "b": np.array([2.0, 3.0])}
        counts, edges = analysis.fitness_histogram(samples, bins=10)
        assert len(edges) == 11
        assert counts["a"].sum() == 3 and counts["b"].sum() == 2
        assert edges[0] == 0.0 and edges[-1] == 3.0


def synthetic_evaluator(individuals):
    for ind in individuals:
        ind.fitness = float(sum(g.s0 for g in ind.genome.genes))


class TestSweep:
    def test_grid_accounting(self, tmp_path):
        cells = sweep(
            [0.5], 1, (EVO, EVO_DEVO), 3, 2, 0.75, 9, synthetic_evaluator, out_dir=tmp_path
        )
        assert len(cells) == 2
        assert {c.mode for c in cells} == {EVO, EVO_DEVO}
        rows = (tmp_path / "fig8_sweep.csv").read_text().splitlines()
        assert len(rows) == 2 + 2  # meta + header + one row per cell

    def test_rate_zero_matches_best_random_individual(self):
        # with mutation switched off, only the initial population and the
        # injected randoms explore; the champion is the best of those
        from voxevo.evolution import run_evolution

        record = run_evolution(
            4, 10, EVO_DEVO, MutationConfig(per_voxel_prob=0.0), 31, synthetic_evaluator
        )
        roots = [e for e in record.lineage if e.parent_id is None]
        assert record.champion().best_fitness == pytest.approx(
            max(e.fitness for e in roots), rel=1e-12
        )

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            sweep([1.5], 1, (EVO,), 2, 1, 0.75, 1, synthetic_evaluator)

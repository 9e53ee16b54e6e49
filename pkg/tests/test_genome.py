import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import uniform_genome
from voxevo.genome import (
    EVO,
    EVO_DEVO,
    ActuationParams,
    GENE_TO_VOXELS,
    Gene,
    Genome,
    LENGTH_MAX,
    LENGTH_MIN,
    NUM_GENES,
    NUM_VOXELS,
    actuation,
    current_length,
    current_lengths_array,
    damping_factor,
    expand_symmetric,
    genes_to_arrays,
    genome_from_text,
    genome_to_text,
    random_genome,
    rest_length,
    total_window,
)

PARAMS = ActuationParams()

lengths = st.floats(min_value=LENGTH_MIN, max_value=LENGTH_MAX)


class TestRestLength:
    def test_static_gene_is_constant(self):
        g = Gene(1.0, 1.0)
        for t in (0.0, 1.0, 4.0, 8.0):
            assert rest_length(g, t, 8.0) == 1.0

    def test_midpoint(self):
        assert rest_length(Gene(0.5, 1.5), 4.0, 8.0) == pytest.approx(1.0, rel=1e-12)

    def test_shrinkage_endpoint(self):
        assert rest_length(Gene(1.5, 0.5), 8.0, 8.0) == pytest.approx(0.5, rel=1e-12)

    def test_rejects_time_outside_life(self):
        with pytest.raises(ValueError):
            rest_length(Gene(1.0, 1.0), -0.1, 8.0)
        with pytest.raises(ValueError):
            rest_length(Gene(1.0, 1.0), 8.1, 8.0)

    @given(s0=lengths, s1=lengths, frac=st.floats(0, 1))
    def test_stays_between_endpoints(self, s0, s1, frac):
        r = rest_length(Gene(s0, s1), frac * 8.0, 8.0)
        assert min(s0, s1) - 1e-12 <= r <= max(s0, s1) + 1e-12


class TestDampingFactor:
    def test_unit_and_above(self):
        assert damping_factor(1.0) == 1.0
        assert damping_factor(1.75) == 1.0

    def test_zero_at_lower_bound(self):
        assert damping_factor(0.25) == pytest.approx(0.0, abs=1e-12)

    def test_linear_region(self):
        assert damping_factor(0.625) == pytest.approx(0.5, rel=1e-12)

    def test_continuous_at_one(self):
        assert damping_factor(1.0 - 1e-12) == pytest.approx(1.0, abs=1e-9)


class TestActuation:
    def test_zero_at_start(self):
        assert actuation(0.0, PARAMS) == 0.0

    def test_peak(self):
        assert actuation(PARAMS.w / 4.0, PARAMS) == pytest.approx(0.2, rel=1e-12)

    def test_half_period(self):
        assert actuation(PARAMS.w / 2.0, PARAMS) == pytest.approx(0.0, abs=1e-12)

    @given(t=st.floats(0, 100))
    def test_bounded(self, t):
        assert abs(actuation(t, PARAMS)) <= PARAMS.u + 1e-15


class TestCurrentLength:
    def test_identity_at_birth(self):
        assert current_length(Gene(1.0, 1.0), 0.0, 8.0, PARAMS) == 1.0

    def test_minimum_voxel_never_actuates(self):
        g = Gene(0.25, 0.25)
        for t in (0.0, 0.0625, 0.125, 3.3):
            assert current_length(g, t, 8.0, PARAMS) == pytest.approx(0.25, rel=1e-12)

    def test_peak_actuated(self):
        assert current_length(Gene(1.0, 1.0), PARAMS.w / 4.0, 8.0, PARAMS) == pytest.approx(
            1.2, rel=1e-12
        )

    @given(s0=lengths, s1=lengths, frac=st.floats(0, 1))
    def test_always_positive_and_bounded(self, s0, s1, frac):
        v = current_length(Gene(s0, s1), frac * 8.0, 8.0, PARAMS)
        assert 0.0 < v <= LENGTH_MAX * 1.2

    @given(s0=lengths, s1=lengths, frac=st.floats(0, 1))
    def test_array_path_matches_scalar(self, s0, s1, frac):
        g = Gene(s0, s1)
        t = frac * 8.0
        arr = current_lengths_array(*genes_to_arrays((g,)), t, 8.0, PARAMS)
        assert arr[0] == current_length(g, t, 8.0, PARAMS)

    @given(s0=lengths, s1=lengths, f1=st.floats(0, 1), f2=st.floats(0, 1))
    def test_monotone_in_time_without_actuation(self, s0, s1, f1, f2):
        quiet = ActuationParams(u=0.0, w=0.25)
        t1, t2 = sorted((f1 * 8.0, f2 * 8.0))
        v1 = current_length(Gene(s0, s1), t1, 8.0, quiet)
        v2 = current_length(Gene(s0, s1), t2, 8.0, quiet)
        if s1 >= s0:
            assert v2 >= v1 - 1e-12
        else:
            assert v2 <= v1 + 1e-12


class TestEvoEquivalence:
    @given(data=st.data())
    @settings(max_examples=50)
    def test_embedding_matches_exactly(self, data):
        vals = data.draw(st.lists(lengths, min_size=NUM_GENES, max_size=NUM_GENES))
        evo = Genome(tuple(Gene(v, v) for v in vals), EVO)
        embedded = Genome(tuple(Gene(v, v) for v in vals), EVO_DEVO)
        for t in (0.0, 1.234, 4.0, 7.77, 8.0):
            for ge, gd in zip(evo.genes, embedded.genes):
                assert current_length(ge, t, 8.0, PARAMS) == current_length(gd, t, 8.0, PARAMS)


class TestGenomeStructure:
    def test_gene_bounds_enforced(self):
        with pytest.raises(ValueError):
            Gene(0.2, 1.0)
        with pytest.raises(ValueError):
            Gene(1.0, 1.76)

    def test_evo_requires_equal_endpoints(self):
        genes = tuple(Gene(1.0, 1.0) for _ in range(NUM_GENES - 1)) + (Gene(1.0, 1.2),)
        with pytest.raises(ValueError):
            Genome(genes, EVO)

    def test_gene_count_enforced(self):
        with pytest.raises(ValueError):
            Genome((Gene(1.0, 1.0),) * 23, EVO)

    def test_mirror_pairs_cover_all_voxels(self):
        seen = [v for pair in GENE_TO_VOXELS for v in pair]
        assert sorted(seen) == list(range(NUM_VOXELS))

    def test_mirror_pair_is_x_reflection(self):
        for a, b in GENE_TO_VOXELS:
            xa, ya, za = a % 4, (a // 4) % 4, a // 16
            xb, yb, zb = b % 4, (b // 4) % 4, b // 16
            assert (ya, za) == (yb, zb)
            assert xb == 3 - xa

    def test_single_gene_maps_to_two_voxels(self):
        genes = [Gene(1.0, 1.0)] * NUM_GENES
        genes[7] = Gene(1.5, 1.5)
        expanded = expand_symmetric(Genome(tuple(genes), EVO))
        assert sum(1 for g in expanded if g.s0 == 1.5) == 2

    def test_uniform_expansion(self):
        expanded = expand_symmetric(uniform_genome(1.3))
        assert all(g.s0 == 1.3 for g in expanded)

    def test_expanded_volume_is_twice_gene_sum(self, rng):
        g = random_genome(EVO_DEVO, rng)
        expanded = expand_symmetric(g)
        total = sum(e.s0**3 for e in expanded)
        assert total == pytest.approx(2.0 * sum(x.s0**3 for x in g.genes), rel=1e-12)


class TestRandomGenome:
    def test_evo_mode_ties_endpoints(self, rng):
        for _ in range(20):
            g = random_genome(EVO, rng)
            assert all(x.s0 == x.s1 for x in g.genes)

    def test_uniform_mean(self):
        rng = np.random.default_rng(99)
        vals = [x.s0 for _ in range(420) for x in random_genome(EVO_DEVO, rng).genes]
        assert np.mean(vals) == pytest.approx(1.0, abs=0.02)

    def test_seed_determinism(self):
        a = random_genome(EVO_DEVO, np.random.default_rng(7))
        b = random_genome(EVO_DEVO, np.random.default_rng(7))
        assert a == b


class TestTotalWindow:
    def test_evo_genome_is_inert(self, rng):
        assert total_window(random_genome(EVO, rng)) == 0.0

    def test_one_open_window_counts_mirror_pair(self):
        genes = [Gene(1.0, 1.0)] * NUM_GENES
        genes[3] = Gene(0.5, 1.5)
        assert total_window(Genome(tuple(genes), EVO_DEVO)) == pytest.approx(2.0, rel=1e-12)

    def test_maximal_windows(self):
        g = Genome(tuple(Gene(0.25, 1.75) for _ in range(NUM_GENES)), EVO_DEVO)
        assert total_window(g) == pytest.approx(72.0, rel=1e-12)

    def test_matches_expanded_sum(self, rng):
        g = random_genome(EVO_DEVO, rng)
        expanded = expand_symmetric(g)
        assert total_window(g) == pytest.approx(
            sum(abs(e.s1 - e.s0) for e in expanded), rel=1e-12
        )


class TestSerialization:
    def test_round_trip_exact(self, rng):
        for mode in (EVO, EVO_DEVO):
            g = random_genome(mode, rng)
            assert genome_from_text(genome_to_text(g)) == g

    def test_rejects_missing_header(self):
        with pytest.raises(ValueError):
            genome_from_text("0 1.0 1.0\n")

    def test_rejects_out_of_order_indices(self):
        g = random_genome(EVO, np.random.default_rng(0))
        text = genome_to_text(g)
        lines = text.splitlines()
        lines[1], lines[2] = lines[2], lines[1]
        with pytest.raises(ValueError):
            genome_from_text("\n".join(lines))

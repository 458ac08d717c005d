import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfq.transfer import (
    Chromosome,
    SeedConfig,
    TransferFunction,
    chromosome_from_json,
    chromosome_to_json,
    expand,
    seed_population,
    smooth,
    tf_from_json,
    tf_to_json,
    window_chromosomes,
)

genes_strategy = st.lists(st.integers(0, 255), min_size=16, max_size=16).map(tuple)


class TestExpand:
    def test_all_zero(self):
        assert expand(Chromosome((0,) * 16)).opacity == (0,) * 256

    def test_first_gene_covers_first_sixteen(self):
        tf = expand(Chromosome((255,) + (0,) * 15))
        assert tf.opacity[:16] == (255,) * 16
        assert tf.opacity[16:] == (0,) * 240

    def test_index_arithmetic(self):
        tf = expand(Chromosome(tuple(i * 17 for i in range(16))))
        assert tf.opacity[32] == 2 * 17

    @given(genes_strategy, genes_strategy)
    @settings(max_examples=50, deadline=None)
    def test_injective(self, ga, gb):
        if ga != gb:
            assert expand(Chromosome(ga)) != expand(Chromosome(gb))


class TestSmooth:
    def test_constant_is_fixed_point(self):
        tf = TransferFunction((100,) * 256)
        assert smooth(tf).opacity == (100,) * 256

    def test_impulse_response(self):
        op = [0] * 256
        op[128] = 255
        out = smooth(TransferFunction(tuple(op)))
        assert out.opacity[127:130] == (51, 153, 51)
        assert out.opacity[126] == 0 and out.opacity[130] == 0

    def test_all_zeros(self):
        assert smooth(TransferFunction((0,) * 256)).opacity == (0,) * 256

    @given(st.lists(st.integers(0, 255), min_size=256, max_size=256))
    @settings(max_examples=50, deadline=None)
    def test_range_preserved_and_mass_within_rounding(self, values):
        out = smooth(TransferFunction(tuple(values)))
        assert all(0 <= x <= 255 for x in out.opacity)
        assert abs(sum(out.opacity) - sum(values)) <= 256


class TestSeeding:
    def test_full_width_window_is_constant(self):
        cands = window_chromosomes(SeedConfig(pop_size=1, levels=(128,)))
        assert Chromosome((128,) * 16) in cands

    def test_candidate_set_size(self):
        # sum_{s=0}^{15} (16 - s) = 136 windows, times 5 levels
        cands = window_chromosomes(SeedConfig(pop_size=1))
        assert len(cands) == 136 * 5 == 680

    def test_population_size_600(self):
        rng = np.random.default_rng(0)
        pop = seed_population(SeedConfig(pop_size=600), rng)
        assert len(pop) == 600
        candidates = set(window_chromosomes(SeedConfig(pop_size=1)))
        assert all(c in candidates for c in pop)

    def test_window_property_single_nonzero_run(self):
        rng = np.random.default_rng(5)
        for c in seed_population(SeedConfig(pop_size=200), rng):
            nz = [i for i, g in enumerate(c.genes) if g != 0]
            if nz:
                assert nz == list(range(nz[0], nz[-1] + 1))

    def test_seed_reproducible(self):
        cfg = SeedConfig(pop_size=64)
        a = seed_population(cfg, np.random.default_rng(42))
        b = seed_population(cfg, np.random.default_rng(42))
        assert a == b

    def test_empty_levels_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            SeedConfig(pop_size=4, levels=())

    def test_n_ranges_must_divide_256(self):
        with pytest.raises(ValueError, match="divide"):
            SeedConfig(pop_size=4, n_ranges=10)


class TestJson:
    def test_tf_round_trip(self):
        tf = TransferFunction((0,) * 256)
        text = tf_to_json(tf)
        assert '"version": 1' in text
        assert tf_from_json(text) == tf

    def test_wrong_length_rejected(self):
        import json

        with pytest.raises(ValueError, match="length 256"):
            tf_from_json(json.dumps({"version": 1, "opacity": [0] * 255}))

    def test_out_of_range_rejected(self):
        import json

        op = [0] * 256
        op[3] = 256
        with pytest.raises(ValueError, match=r"outside \[0, 255\]"):
            tf_from_json(json.dumps({"version": 1, "opacity": op}))

    def test_malformed_text_rejected(self):
        with pytest.raises(ValueError, match="malformed"):
            tf_from_json("{nope")

    def test_chromosome_round_trip(self):
        c = Chromosome(tuple(range(16)))
        assert chromosome_from_json(chromosome_to_json(c)) == c

    @given(genes_strategy)
    @settings(max_examples=30, deadline=None)
    def test_tf_round_trip_property(self, genes):
        tf = expand(Chromosome(genes))
        assert tf_from_json(tf_to_json(tf)) == tf


class TestValidation:
    def test_wrong_gene_count(self):
        with pytest.raises(ValueError, match="length 16"):
            Chromosome((0,) * 15)

    def test_gene_out_of_range(self):
        with pytest.raises(ValueError, match=r"outside \[0, 255\]"):
            Chromosome((0,) * 15 + (300,))

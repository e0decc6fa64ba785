import math

import numpy as np
import pytest

from depthscreen.depth import (
    DQ_DEGENERATE_SURROGATE,
    DepthComputationError,
    Orientation,
    compute_depth,
    depth_cdf,
    directional_quantile,
    extremal_depth,
    extreme_rank_length_depth,
    h_mode_depth,
    integrated_depth,
    l_infinity_depth,
    modified_band_depth,
    one_sided_variant,
    pointwise_depth,
    random_tukey_depth,
)
from depthscreen.ensemble import TiePolicy, rank_matrix
from depthscreen import oracle

from conftest import fm


def constants(*levels, t=4):
    return fm([[float(v)] * t for v in levels])


class TestPointwiseDepth:
    def test_hand_values_n3(self):
        rm = rank_matrix(constants(0, 1, 2, t=1))
        d = pointwise_depth(rm)[:, 0]
        assert d[1] == 1.0
        assert d[0] == pytest.approx(1 / 3, abs=1e-15)
        assert d[2] == pytest.approx(1 / 3, abs=1e-15)

    def test_hand_value_n4(self):
        rm = rank_matrix(constants(0, 1, 2, 3, t=1))
        d = pointwise_depth(rm)[:, 0]
        assert d[1] == 0.75  # rank 2 of 4


class TestIntegratedDepth:
    def test_constants_n3(self):
        got = integrated_depth(rank_matrix(constants(0, 1, 2))).scores
        expect = oracle.oracle_integrated_depth(constants(0, 1, 2))
        assert np.array_equal(got, expect)
        assert np.allclose(got, [5 / 6, 5 / 6, 1 / 2], rtol=0, atol=1e-15)

    def test_constants_n2(self):
        got = integrated_depth(rank_matrix(constants(0, 1))).scores
        assert np.array_equal(got, [1.0, 0.5])

    def test_identical_curves_midrank_all_equal(self):
        m = constants(5, 5, 5, 5)
        got = integrated_depth(rank_matrix(m, TiePolicy.MIDRANK)).scores
        assert np.all(got == got[0])

    def test_orientation_and_order(self):
        res = integrated_depth(rank_matrix(constants(0, 1, 2)))
        assert res.orientation is Orientation.DEPTH
        # scenario 2 is least deep; tie between 0 and 1 broken by index
        assert list(res.outlying_order) == [2, 0, 1]


class TestModifiedBandDepth:
    def test_constants_n3(self):
        got = modified_band_depth(rank_matrix(constants(0, 1, 2))).scores
        expect = oracle.oracle_modified_band_depth(constants(0, 1, 2))
        assert np.array_equal(got, expect)
        assert np.allclose(got, [0.0, 1 / 3, 0.0], rtol=0, atol=0)

    def test_median_rank_n5(self):
        got = modified_band_depth(rank_matrix(constants(0, 1, 2, 3, 4))).scores
        assert got[2] == 0.4  # (3-1)(5-3)/C(5,2)

    def test_extreme_curves_zero(self, rng):
        values = np.vstack([rng.uniform(1, 2, (4, 6)), np.full((1, 6), 99.0)])
        got = modified_band_depth(rank_matrix(fm(values))).scores
        assert got[-1] == 0.0

    def test_rejects_n2(self):
        with pytest.raises(DepthComputationError, match="N >= 3"):
            modified_band_depth(rank_matrix(constants(0, 1)))


class TestExtremalDepth:
    def test_constants_n3(self):
        got = extremal_depth(rank_matrix(constants(0, 1, 2))).scores
        expect = oracle.oracle_extremal_depth(constants(0, 1, 2))
        assert np.array_equal(got, expect)
        assert np.allclose(got, [2 / 3, 1.0, 2 / 3], rtol=0, atol=0)

    def test_identical_curves_midrank(self):
        got = extremal_depth(rank_matrix(constants(5, 5, 5), TiePolicy.MIDRANK)).scores
        assert np.array_equal(got, [1.0, 1.0, 1.0])

    def test_n2_degenerate_both_one(self):
        # both ordinal ranks give pointwise depth 1/2, so the CDFs coincide
        got = extremal_depth(rank_matrix(constants(0, 1))).scores
        assert np.array_equal(got, [1.0, 1.0])

    def test_cdf_invariants(self, rng):
        m = fm(rng.standard_normal((7, 5)))
        cdf = depth_cdf(rank_matrix(m))
        assert np.all(np.diff(cdf.levels) > 0)
        assert np.all(np.diff(cdf.mass, axis=1) >= 0)
        assert np.allclose(cdf.mass[:, -1], 1.0)
        n = 7
        achievable = {(n - abs(2 * r - n - 1)) / n for r in range(1, n + 1)}
        assert set(np.round(cdf.levels, 12)) <= {round(a, 12) for a in achievable}


class TestExtremeRankLength:
    def test_constants_n3(self):
        got = extreme_rank_length_depth(rank_matrix(constants(0, 1, 2))).scores
        expect = oracle.oracle_extreme_rank_length_depth(constants(0, 1, 2))
        assert np.array_equal(got, expect)
        assert np.allclose(got, [2 / 3, 1.0, 2 / 3], rtol=0, atol=0)

    def test_identical_curves_midrank(self):
        got = extreme_rank_length_depth(rank_matrix(constants(4, 4, 4, 4), TiePolicy.MIDRANK)).scores
        assert np.array_equal(got, np.ones(4))

    def test_t1_ordering_matches_exd(self, rng):
        for _ in range(25):
            n = int(rng.integers(2, 9))
            m = fm(rng.standard_normal((n, 1)))
            rm = rank_matrix(m)
            erld = extreme_rank_length_depth(rm)
            exd = extremal_depth(rm)
            assert list(erld.outlying_order) == list(exd.outlying_order)


class TestLInfinityDepth:
    def test_constants_n2(self):
        got = l_infinity_depth(constants(0, 1)).scores
        assert np.allclose(got, [2 / 3, 2 / 3], rtol=1e-15)

    def test_constants_n3(self):
        got = l_infinity_depth(constants(0, 1, 2)).scores
        assert np.allclose(got, [0.5, 0.6, 0.5], rtol=1e-15)

    def test_identical_all_one(self):
        got = l_infinity_depth(constants(2, 2, 2)).scores
        assert np.array_equal(got, np.ones(3))


class TestHModeDepth:
    def test_hand_kernel_values(self):
        m = fm([[0.0], [1.0], [2.0]])
        got = h_mode_depth(m, h=1.0).scores
        k = [math.exp(0.0), math.exp(-0.5), math.exp(-2.0)]
        expect = np.array([k[0] + k[1] + k[2], k[1] + k[0] + k[1], k[2] + k[1] + k[0]]) / 3
        assert np.allclose(got, expect, rtol=1e-14)

    def test_identical_normalized_to_one_and_flagged(self):
        res = h_mode_depth(constants(1, 1, 1))
        assert np.array_equal(res.scores, np.ones(3))
        assert "degenerate_bandwidth" in res.params.flags

    def test_translation_invariant_ordering(self, rng):
        values = rng.standard_normal((9, 6))
        shift = rng.standard_normal(6)
        a = h_mode_depth(fm(values))
        b = h_mode_depth(fm(values + shift))
        assert list(a.outlying_order) == list(b.outlying_order)

    def test_rejects_nonpositive_bandwidth(self):
        with pytest.raises(DepthComputationError, match="positive"):
            h_mode_depth(constants(0, 1), h=0.0)

    def test_auto_bandwidth_is_15pct_quantile(self, rng):
        values = rng.standard_normal((6, 3))
        res = h_mode_depth(fm(values))
        diffs = []
        for i in range(6):
            for j in range(i + 1, 6):
                diffs.append(math.sqrt(((values[i] - values[j]) ** 2).sum()))
        assert res.params.bandwidth == pytest.approx(np.quantile(diffs, 0.15), rel=1e-12)


class TestDirectionalQuantile:
    def test_mean_curve_scores_zero(self, rng):
        values = rng.standard_normal((5, 4))
        # a row equal to the mean of the other four is the mean of all five
        values[2] = values[[0, 1, 3, 4]].mean(axis=0)
        assert np.allclose(values.mean(axis=0), values[2])
        res = directional_quantile(fm(values))
        assert res.scores[2] == pytest.approx(0.0, abs=1e-12)
        assert res.orientation is Orientation.OUTLYINGNESS

    def test_curve_at_upper_quantile_scores_one(self):
        # 41 scenarios, p=0.975 -> position 39 of 0..40: Q is the 40th sorted value
        n = 41
        values = np.linspace(0, 40, n)[:, None]
        res = directional_quantile(fm(values))
        q = np.quantile(values[:, 0], 0.975)
        mu = values[:, 0].mean()
        i_at_q = int(np.argmin(np.abs(values[:, 0] - q)))
        if values[i_at_q, 0] == q:
            assert res.scores[i_at_q] == pytest.approx(1.0, rel=1e-12)
        assert res.scores.max() >= 1.0

    def test_n5_frozen_from_oracle(self):
        m = fm([[0.0], [1.0], [2.0], [3.0], [10.0]])
        got = directional_quantile(m).scores
        expect = oracle.oracle_directional_quantile(m)
        assert np.allclose(got, expect, rtol=1e-12, atol=0)
        # frozen values derived by hand evaluation of the oracle:
        # mean 3.2, Q97.5 = 9.3, Q2.5 = 0.1
        hand = np.array([-3.2 / 3.1, -2.2 / 3.1, -1.2 / 3.1, -0.2 / 3.1, 6.8 / 6.1])
        assert np.allclose(got, hand, rtol=1e-12)

    def test_degenerate_denominator_surrogate(self):
        # p_hi = p_lo = 0.5 and median == mean: nonzero deviations blow up
        m = fm([[0.0], [3.0], [3.0], [6.0]])
        res = directional_quantile(m, p_hi=0.5, p_lo=0.5)
        assert res.scores[0] == DQ_DEGENERATE_SURROGATE
        assert res.scores[3] == DQ_DEGENERATE_SURROGATE
        assert res.scores[1] == 0.0 and res.scores[2] == 0.0
        assert "degenerate_denominator" in res.params.flags

    def test_needs_three(self):
        with pytest.raises(DepthComputationError):
            directional_quantile(constants(0, 1))


class TestRandomTukeyDepth:
    def test_all_ones_direction(self):
        m = constants(0, 1, 2)
        res = random_tukey_depth(m, directions=np.ones(4))
        expect = oracle.oracle_random_tukey_depth(m, np.ones(4)[None, :])
        assert np.array_equal(res.scores, expect)
        assert np.allclose(res.scores, [1 / 3, 1.0, 1 / 3], rtol=0, atol=1e-15)

    def test_min_over_superset(self, rng):
        m = fm(rng.standard_normal((8, 5)))
        r1 = random_tukey_depth(m, k=1, seed=99)
        r50 = random_tukey_depth(m, k=50, seed=99)
        # same seed: the K=1 direction is the first of the 50
        assert np.all(r50.scores <= r1.scores)

    def test_identical_curves_midrank_equal(self):
        res = random_tukey_depth(constants(3, 3, 3), k=5, seed=1,
                                 tie_policy=TiePolicy.MIDRANK)
        assert np.all(res.scores == res.scores[0])

    def test_deterministic_given_seed(self, rng):
        m = fm(rng.standard_normal((6, 4)))
        a = random_tukey_depth(m, k=10, seed=5).scores
        b = random_tukey_depth(m, k=10, seed=5).scores
        assert np.array_equal(a, b)

    def test_rejects_zero_k_and_zero_direction(self):
        m = constants(0, 1)
        with pytest.raises(DepthComputationError):
            random_tukey_depth(m, k=0)
        with pytest.raises(DepthComputationError, match="zero"):
            random_tukey_depth(m, directions=np.zeros((1, 4)))


class TestOneSided:
    def test_erld_variant_order(self):
        rm = rank_matrix(constants(0, 1, 2))
        res = one_sided_variant(rm, "erld")
        assert res.orientation is Orientation.OUTLYINGNESS
        assert list(res.outlying_order) == [2, 1, 0]  # highest curve most extreme

    def test_mbd_variant_monotone_in_level(self):
        rm = rank_matrix(constants(0, 1, 2))
        res = one_sided_variant(rm, "mbd")
        assert np.array_equal(res.scores, [0.0, 0.5, 1.0])

    def test_dq_upper_below_mean_is_zero(self, rng):
        values = rng.uniform(10, 20, (6, 4))
        values[0] = 1.0  # far below the mean everywhere
        res = one_sided_variant(fm(values), "dq_upper")
        assert res.scores[0] == 0.0

    def test_distance_metrics_rejected(self):
        rm = rank_matrix(constants(0, 1, 2))
        with pytest.raises(DepthComputationError, match="direction"):
            one_sided_variant(rm, "hmd")
        with pytest.raises(DepthComputationError, match="direction"):
            one_sided_variant(rm, "lid")

    def test_dq_upper_needs_values(self):
        rm = rank_matrix(constants(0, 1, 2))
        with pytest.raises(TypeError):
            one_sided_variant(rm, "dq_upper")


class TestDispatch:
    def test_all_metrics_run(self, rng):
        m = fm(rng.standard_normal((8, 6)))
        for metric in ("ID", "MBD", "EXD", "ERLD", "LID", "HMD", "DQ", "RTD"):
            res = compute_depth(m, metric)
            assert res.metric == metric
            assert res.scores.shape == (8,)

    def test_unknown_metric(self):
        with pytest.raises(DepthComputationError, match="unknown metric"):
            compute_depth(constants(0, 1, 2), "XYZ")

    def test_depth_scores_in_unit_interval(self, rng):
        for _ in range(10):
            m = fm(rng.standard_normal((int(rng.integers(3, 12)), int(rng.integers(1, 6)))))
            for metric in ("ID", "MBD", "EXD", "ERLD", "LID", "HMD", "RTD"):
                s = compute_depth(m, metric).scores
                assert (s >= 0.0).all() and (s <= 1.0).all(), metric

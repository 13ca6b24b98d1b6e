import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from mixdetect.errors import CalibrationError, DegenerateDirectionError, DomainError
from mixdetect.procedures import (
    Sample,
    decide_batch,
    psi1,
    psi1_batch,
    psi2,
    psi2_batch,
    psi3,
    psi3_batch,
    split_project,
)
from mixdetect.report import Procedure
from mixdetect.simulation import MixtureParams, sample_mixture_batch


def three_sigma(alpha, reps):
    return 3 * math.sqrt(alpha * (1 - alpha) / reps)


class TestSample:
    def test_vector_becomes_column(self):
        assert Sample([1.0, 2.0, 3.0]).data.shape == (3, 1)

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            Sample(np.array([[1.0, np.nan]]))

    def test_rejects_empty(self):
        with pytest.raises(DomainError):
            Sample(np.zeros((0, 3)))


class TestPsi1:
    def test_zeros_accept(self):
        r = psi1(np.zeros((20, 3)), 0.05)
        assert r.statistic == 0.0 and not r.reject

    def test_single_point(self):
        r = psi1([[3.0]], 0.05)
        assert r.statistic == 9.0
        assert r.threshold == pytest.approx(3.841458820694124)
        assert r.reject

    def test_report_convention(self, rng):
        r = psi1(rng.standard_normal((30, 4)) + 0.3, 0.05)
        assert r.reject == (r.statistic > r.threshold)
        assert r.procedure is Procedure.PSI1

    def test_rotation_invariance(self):
        x = np.random.default_rng(1).standard_normal((40, 6)) + 0.2
        for seed in range(5):
            q = stats.ortho_group.rvs(6, random_state=seed)
            assert psi1(x @ q, 0.05).statistic == pytest.approx(psi1(x, 0.05).statistic, rel=1e-9)

    def test_null_statistic_is_chi_squared(self):
        reps, n, d = 100_000, 50, 5
        xs = np.random.default_rng(31).standard_normal((reps, n, d))
        total = xs.sum(axis=1)
        stat = (total**2).sum(axis=1) / n
        assert stats.kstest(stat, stats.chi2(d).cdf).pvalue > 0.01

    def test_batch_agrees(self, rng):
        xs = rng.standard_normal((200, 30, 3)) + 0.2
        assert list(psi1_batch(xs, 0.05)) == [psi1(x, 0.05).reject for x in xs]


class TestSplitProject:
    def test_direction_and_projection(self):
        x = np.array([[3.0, 4.0], [3.0, 4.0], [1.0, 1.0], [0.0, 0.0]])
        s = split_project(x)
        assert np.allclose(s.v_n, [0.6, 0.8])
        assert s.projections == pytest.approx([1.4, 0.0])
        assert np.linalg.norm(s.v_n) == pytest.approx(1.0, abs=1e-12)

    def test_odd_n(self):
        s = split_project(np.random.default_rng(2).standard_normal((9, 3)))
        assert s.half_a.n == 4 and s.half_y.n == 5 and len(s.projections) == 5

    def test_degenerate(self):
        x = np.array([[1.0, 0.0], [-1.0, 0.0], [2.0, 2.0], [0.5, 0.1]])
        with pytest.raises(DegenerateDirectionError):
            split_project(x)

    def test_too_small(self):
        with pytest.raises(DomainError):
            split_project(np.ones((3, 2)))

    def test_null_projections_are_standard_normal(self):
        x = np.random.default_rng(8).standard_normal((1000, 12))
        proj = split_project(x).projections
        assert len(proj) == 500
        assert stats.kstest(proj, "norm").statistic < 1.36 / math.sqrt(500)


class TestPsi2:
    def test_zeros_accept(self, calib_psi2_512):
        assert not psi2(np.zeros((512, 4)), 0.05, calib_psi2_512).reject

    def test_degenerate_with_signal_raises(self, calib_psi2_512):
        x = np.zeros((512, 2))
        x[300] = 5.0
        with pytest.raises(DegenerateDirectionError):
            psi2(x, 0.05, calib_psi2_512)

    def test_size_mismatch(self, calib_psi2_512):
        with pytest.raises(CalibrationError):
            psi2(np.ones((100, 2)), 0.05, calib_psi2_512)

    def test_level_mismatch(self, calib_psi2_512):
        with pytest.raises(CalibrationError):
            psi2(np.ones((512, 2)), 0.1, calib_psi2_512)

    def test_planted_power(self, calib_psi2_512):
        params = MixtureParams(0.5, (1.0, 1.0, 1.0, 1.0))
        xs = sample_mixture_batch(params, 512, 500, np.random.default_rng(40))
        assert psi2_batch(xs, calib_psi2_512).mean() >= 0.9

    def test_null_level(self, calib_psi2_512):
        reps = 4000
        xs = np.random.default_rng(41).standard_normal((reps, 512, 3))
        assert psi2_batch(xs, calib_psi2_512).mean() <= 0.05 + three_sigma(0.05, reps)

    def test_batch_agrees(self, calib_psi2_512):
        params = MixtureParams(0.3, (0.4, 0.0, 0.3))
        xs = sample_mixture_batch(params, 512, 60, np.random.default_rng(42))
        assert list(psi2_batch(xs, calib_psi2_512)) == [psi2(x, 0.05, calib_psi2_512).reject for x in xs]

    def test_report_detail(self, calib_psi2_512):
        r = psi2(np.random.default_rng(3).standard_normal((512, 4)), 0.05, calib_psi2_512)
        assert r.reject == any(d["reject"] for d in r.details)
        assert len(r.details) == len(calib_psi2_512.grid)


class TestPsi3:
    def test_zeros_accept(self, calib_psi3_512_16):
        assert not psi3(np.zeros((512, 16)), 0.05, calib_psi3_512_16).reject

    def test_wrong_level_calibration(self, calib_psi3_512_16):
        with pytest.raises(CalibrationError):
            psi3(np.zeros((512, 8)), 0.05, calib_psi3_512_16)

    def test_planted_power(self, calib_psi3_512_16):
        mu = np.zeros(16)
        mu[2] = 2.0
        xs = sample_mixture_batch(MixtureParams(0.5, mu), 512, 300, np.random.default_rng(50))
        assert psi3_batch(xs, 0.05, calib_psi3_512_16).mean() >= 0.9

    def test_sign_symmetry(self, calib_psi3_512_16):
        rng = np.random.default_rng(51)
        for _ in range(20):
            x = rng.standard_normal((512, 16)) * rng.uniform(0.8, 1.6)
            assert psi3(x, 0.05, calib_psi3_512_16).reject == psi3(-x, 0.05, calib_psi3_512_16).reject

    def test_batch_agrees(self, calib_psi3_512_16):
        mu = np.zeros(16)
        mu[5] = -1.0
        xs = sample_mixture_batch(MixtureParams(0.2, mu), 512, 40, np.random.default_rng(52))
        assert list(psi3_batch(xs, 0.05, calib_psi3_512_16)) == [
            psi3(x, 0.05, calib_psi3_512_16).reject for x in xs]

    def test_detail_per_coordinate(self, calib_psi3_512_16):
        x = np.random.default_rng(53).standard_normal((512, 16))
        x[:40, 7] += 6.0
        r = psi3(x, 0.05, calib_psi3_512_16)
        assert r.reject and r.details[7]["upper_reject"]
        assert r.reject == any(d["reject"] for d in r.details)

    @pytest.mark.parametrize("d", [2, 16, 64])
    def test_null_level(self, psi3_calibs_64, d):
        reps = 20_000
        xs = np.random.default_rng(60 + d).standard_normal((reps, 64, d))
        rate = psi3_batch(xs, 0.05, psi3_calibs_64[d]).mean()
        assert rate <= 0.05 + three_sigma(0.05, reps)


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=15, deadline=None)
def test_row_permutation_invariance(psi3_calibs_64, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((64, 2)) + rng.normal(0, 0.5, size=2)
    perm = rng.permutation(64)
    calib = psi3_calibs_64[2]
    assert psi1(x, 0.05).reject == psi1(x[perm], 0.05).reject
    assert psi1(x, 0.05).statistic == pytest.approx(psi1(x[perm], 0.05).statistic, rel=1e-12)
    assert psi3(x, 0.05, calib).reject == psi3(x[perm], 0.05, calib).reject


def test_decide_batch_requires_calibration():
    with pytest.raises(CalibrationError):
        decide_batch(Procedure.PSI2, np.zeros((1, 8, 2)), 0.05)

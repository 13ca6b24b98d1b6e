import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixdetect import bounds as b
from mixdetect.errors import DomainError

from oracles import axis_shifts, corner_shifts, mc_lr_second_moment

E = math.e


class TestRates:
    def test_reference_point(self):
        r = b.rates(1000, 16, 0.05, 0.1, 1.0)
        assert r.c_of_m == pytest.approx(1 + E / 2, rel=1e-15)
        assert r.c_of_m == pytest.approx(2.35914, abs=1e-5)
        assert r.eta == pytest.approx(1.7)
        assert r.rho_sharp == pytest.approx(2 / (2 * math.sqrt(1 + E / 2) * math.sqrt(1000)), rel=1e-14)
        assert r.rho_sharp == pytest.approx(0.02059, abs=1e-5)
        assert r.rho_star == pytest.approx(math.sqrt(math.log(1 + 16 * 1.7**2) / ((1 + E / 2) * 1000)), rel=1e-14)
        assert r.rho_dagger == pytest.approx(2 / math.sqrt(1000) * math.sqrt(math.log(math.log(1000))))
        assert r.sharp_assumption_ok
        assert "not specified" in r.rho_dagger_note

    def test_one_dimension(self):
        r = b.rates(400, 1, 0.05, 0.1, 0.5)
        assert r.rho_sharp == pytest.approx(1 / (2 * math.sqrt(b.c_of_m(0.5)) * 20))

    def test_rho_star_unit_case(self):
        eta = 1.7
        d = (E - 1) / eta**2
        assert b.rho_star(1, d, eta, 1.0) == pytest.approx(1.0, rel=1e-14)

    def test_warns_outside_sharp_regime(self):
        with pytest.warns(UserWarning):
            r = b.rates(100, 4, 0.2, 0.2, 1.0)
        assert not r.sharp_assumption_ok

    @pytest.mark.parametrize("kwargs", [dict(M=0.0), dict(M=-1.0), dict(n=0), dict(alpha=0.6, beta=0.5)])
    def test_domain(self, kwargs):
        args = dict(n=100, d=4, alpha=0.05, beta=0.1, M=1.0) | kwargs
        with pytest.raises(DomainError):
            b.rates(**args)

    @given(st.floats(0.01, 3.0))
    def test_c_of_m_at_least_one(self, M):
        assert b.c_of_m(M) >= 1


class TestSecondMoments:
    @pytest.mark.parametrize("fn", [b.lr_second_moment_l2, b.lr_second_moment_linf])
    def test_no_contamination(self, fn):
        for n, d, r in [(1, 1, 1.0), (50, 7, 2.0), (10**6, 300, 0.5)]:
            assert fn(n, d, 0.0, r) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("fn", [b.lr_second_moment_l2, b.lr_second_moment_linf])
    def test_zero_shift(self, fn):
        assert fn(100, 5, 0.4, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_l2_hand_enumeration(self):
        expected = 0.5 * ((1 + 0.25 * (E - 1)) + (1 + 0.25 * (1 / E - 1)))
        assert b.lr_second_moment_l2(1, 1, 0.5, 1.0) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(1.13577, abs=1e-5)

    def test_l2_against_full_enumeration(self):
        # brute force over all 4^d pairs of corners
        import itertools
        n, d, eps, r = 7, 4, 0.35, 0.9
        corners = list(itertools.product((-1, 1), repeat=d))
        acc = 0.0
        for w in corners:
            for v in corners:
                acc += (1 + eps**2 * math.expm1(r * r / d * np.dot(w, v))) ** n
        assert b.lr_second_moment_l2(n, d, eps, r) == pytest.approx(acc / 4**d, rel=1e-12)

    def test_linf_examples(self):
        assert b.lr_second_moment_linf(1, 2, 0.5, 1.0) == pytest.approx(0.5 * (1 + 0.25 * (E - 1)) + 0.5, rel=1e-14)
        assert b.lr_second_moment_linf(1, 2, 0.5, 1.0) == pytest.approx(1.21479, abs=1e-5)
        assert b.lr_second_moment_linf(9, 1, 0.3, 0.7) == pytest.approx((1 + 0.09 * math.expm1(0.49)) ** 9)

    def test_large_n_stays_finite(self):
        v = b.lr_second_moment_l2(10**6, 10**4, 0.01, 1.0)
        assert math.isfinite(v) and v > 1

    @pytest.mark.parametrize("fn", [b.lr_second_moment_l2, b.lr_second_moment_linf])
    def test_monotone_on_grid(self, fn):
        eps_grid, r_grid, n_grid = [0, 0.05, 0.1, 0.3, 0.6], [0.1, 0.5, 1.0, 1.5], [1, 5, 50, 500]
        for d in (1, 3, 16):
            vals = np.array([[[fn(n, d, e, r) for n in n_grid] for r in r_grid] for e in eps_grid])
            assert np.all(np.diff(vals, axis=0) >= -1e-12)
            assert np.all(np.diff(vals, axis=1) >= -1e-12)
            assert np.all(np.diff(vals, axis=2) >= -1e-12)

    @pytest.mark.parametrize("prior", ["corner", "axis"])
    def test_monte_carlo_oracle_small(self, prior):
        n, d, eps, r = 3, 2, 0.5, 1.0
        shifts = corner_shifts(d, r) if prior == "corner" else axis_shifts(d, r)
        est, se = mc_lr_second_moment(shifts, n, eps, 200_000, seed=17)
        exact = (b.lr_second_moment_l2 if prior == "corner" else b.lr_second_moment_linf)(n, d, eps, r)
        assert abs(est - exact) <= 3 * se


class TestChecks:
    def test_unit_moment_is_indistinguishable(self):
        assert b.indistinguishability_check(1.0, 0.05, 0.1)

    def test_boundary(self):
        assert 1 + b.eta(0.05, 0.1) ** 2 == pytest.approx(3.89)
        assert not b.indistinguishability_check(3.9, 0.05, 0.1)

    def test_just_below_rho_sharp(self):
        r = b.rates(1000, 16, 0.05, 0.1, 1.0)
        eps = 0.99 * r.rho_sharp / 1.0
        assert b.indistinguishability_check(b.lr_second_moment_l2(1000, 16, eps, 1.0), 0.05, 0.1)

    def test_moment_below_one_is_a_bug(self):
        with pytest.raises(DomainError):
            b.indistinguishability_check(0.99, 0.05, 0.1)

    def test_taylor_examples(self):
        assert b.taylor_bound_check(0.0, 1.0)
        assert abs(E - 2) == pytest.approx(0.71828, abs=1e-5)
        assert b.taylor_bound_check(1.0, 1.0)
        assert b.taylor_bound_check(-1.0, 1.0)
        with pytest.raises(DomainError):
            b.taylor_bound_check(2.0, 1.0)

    @given(st.floats(0.01, 5.0), st.floats(-1.0, 1.0))
    def test_taylor_property(self, M, frac):
        assert b.taylor_bound_check(frac * M, M)

    def test_proof_chain_bound(self):
        # n a <= 1/4 with a = C(M) eps^2 r^2 / sqrt(d) keeps the moment below 3
        for M in (0.5, 1.0, 1.5):
            c = b.c_of_m(M)
            for d in (1, 4, 16, 100):
                for n in (1, 10, 1000, 10**5):
                    for r in np.linspace(0.05, M, 5):
                        eps_max = math.sqrt(math.sqrt(d) / (4 * c * n)) / r
                        for eps in np.linspace(0, min(eps_max, 1.0), 6):
                            assert b.lr_second_moment_l2(n, d, eps, r) <= 3

    def test_linf_equivalence(self):
        for n in (1, 10, 200):
            for d in (1, 2, 20, 500):
                for eps in (0.01, 0.1, 0.4, 0.9):
                    for r in (0.2, 0.8, 1.5):
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore")
                            m2 = b.lr_second_moment_linf(n, d, eps, r)
                        lhs = m2 < 1 + b.eta(0.05, 0.1) ** 2
                        assert lhs == b.linf_indistinguishable_closed_form(n, d, eps, r, 0.05, 0.1)

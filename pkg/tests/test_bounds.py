import math

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from vrjplab.bounds import (
    BoundParams,
    const_c_s,
    const_c_wbar_s,
    critical_factor,
    cs_double_integral,
    cs_power_quadrature,
    decay_bound,
    one_particle_pathsum,
    pathsum_exact,
    product_bound,
    recursion_rhs,
    twoparticle_bound,
    wbar_threshold,
)

S_GRID = [round(0.05 * i, 2) for i in range(1, 10)]


class TestGreenMomentConstant:
    @pytest.mark.parametrize("s", S_GRID)
    def test_dual_oracles_agree(self, s):
        canonical = const_c_s(s) ** s
        assert cs_power_quadrature(s) == pytest.approx(canonical, rel=1e-6)

    @pytest.mark.parametrize("s", S_GRID)
    def test_tail_integral_equals_power(self, s):
        # the double integral is the tail formula for E[G^s]., i.e. c_s ** s
        assert cs_double_integral(s) == pytest.approx(const_c_s(s) ** s, rel=1e-6)

    def test_reference_value_at_quarter(self):
        assert const_c_s(0.25) ** 0.25 == pytest.approx(1.720, abs=5e-4)

    def test_zeroth_moment_limit(self):
        assert const_c_s(1e-4) ** 1e-4 == pytest.approx(1.0, abs=1e-3)

    def test_pole_behavior(self):
        assert const_c_s(0.49) ** 0.49 > 20.0
        for s in (0.5, 0.6):
            with pytest.raises(ValueError):
                const_c_s(s)


class TestCriticalDecayBase:
    def test_weak_reinforcement_limit(self):
        # convergence to 2 is polynomial in wbar**s, so probe very deep
        assert const_c_wbar_s(1e-30, 0.25) == pytest.approx(2.0, abs=1e-6)

    def test_strictly_decreasing_in_wbar(self):
        values = [const_c_wbar_s(w, 0.25) for w in np.geomspace(1e-6, 1e3, 40)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_threshold_root(self):
        w_star = wbar_threshold(0.25)
        assert const_c_wbar_s(w_star, 0.25) == pytest.approx(1.0, abs=1e-9)
        assert const_c_wbar_s(w_star * 0.5, 0.25) > 1.0 > const_c_wbar_s(w_star * 2.0, 0.25)


class TestDecayBound:
    def test_zero_scale_returns_constant(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0, n=0)
        assert decay_bound("delta_pin_subcritical", p, 3.7) == pytest.approx(3.7)

    def test_two_point_ratio(self):
        p1 = BoundParams(s=0.25, rho=4.0, wbar=1.0, m=5)
        p2 = BoundParams(s=0.25, rho=4.0, wbar=1.0, m=6)
        ratio = decay_bound("two_point_subcritical", p2, 1.0) / decay_bound(
            "two_point_subcritical", p1, 1.0
        )
        assert ratio == pytest.approx((2 * 4.0) ** -0.25, rel=1e-12)

    def test_lower_bound_companion_shape(self):
        # a matching lower envelope uses the same geometric factor
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0, m=4)
        upper = decay_bound("two_point_subcritical", p, 2.0)
        lower = decay_bound("two_point_subcritical", p, 0.5)
        assert lower < upper and lower / upper == pytest.approx(0.25)

    def test_critical_kinds_require_critical_rho(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0, n=3)
        with pytest.raises(ValueError):
            decay_bound("delta_pin_critical", p, 1.0)
        p2 = BoundParams(s=0.25, rho=2.0, wbar=0.1, n=3)
        assert decay_bound("delta_pin_critical", p2, 1.0) > 0.0

    def test_unknown_kind(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        with pytest.raises(ValueError):
            decay_bound("sideways", p, 1.0)


class TestRecursionRhs:
    def test_single_term_at_top_scale(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        from vrjplab.bounds import boundary_block_weight, sibling_block_weight

        css = const_c_s(0.25) ** 0.25
        manual = (
            (1 + css * sibling_block_weight(4, 4.0, 1.0) ** 0.25)
            * css
            * boundary_block_weight(4, 5, 4.0, 1.0) ** 0.25
        )
        assert recursion_rhs(4, 5, p, [1.0]) == pytest.approx(manual, rel=1e-14)

    def test_zero_moments_give_zero(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        assert recursion_rhs(1, 5, p, [0.0, 0.0, 0.0, 0.0]) == 0.0

    def test_length_mismatch_rejected(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        with pytest.raises(ValueError):
            recursion_rhs(1, 5, p, [1.0, 1.0])


class TestPathSum:
    def test_all_zero_factors(self):
        res = pathsum_exact(0, 5, np.zeros(5))
        assert res.exact == 0.0 and res.closed_form == 0.0 and res.product_form == 1.0

    def test_single_jump(self):
        res = pathsum_exact(2, 3, np.array([0.7]))
        assert res.exact == pytest.approx(0.7)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=60, deadline=None)
    def test_enumeration_matches_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(0, 4))
        n = k + int(rng.integers(1, 13))
        a = rng.uniform(0.0, 4.0, size=n - k)
        res = pathsum_exact(k, n, a)
        assert res.exact == pytest.approx(res.closed_form, rel=1e-12, abs=1e-300)
        assert res.exact <= res.product_form * (1 + 1e-12)

    def test_range_cap(self):
        with pytest.raises(ValueError):
            pathsum_exact(0, 21, np.ones(21))


class TestProductBound:
    def test_empty_product(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        assert product_bound(5, 5, p) == pytest.approx((1.0 / (4 * 3 * 4.0)) ** 0.25)

    def test_partial_products_increase_and_stay_bounded(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        prefactor = (1.0 / (4 * 3 * 4.0)) ** 0.25
        factors = [
            product_bound(0, n, p) / (prefactor * 4.0 ** (-0.25 * n)) for n in range(1, 61)
        ]
        assert all(b >= a for a, b in zip(factors, factors[1:]))
        # exponential-of-series envelope from the convergent term sum
        cs = const_c_s(0.25)
        series = sum(
            (1 + ((cs / 8) * (0.5**i)) ** 0.25) * ((cs / 8) * (0.5**i)) ** 0.25
            for i in range(200)
        )
        assert factors[-1] <= math.exp(series)

    def test_critical_factor_threshold(self):
        s = 0.25
        w_star = scipy.optimize.brentq(
            lambda w: critical_factor(w, s) - 2**s, 1e-12, 10.0, xtol=1e-14
        )
        assert critical_factor(w_star * 0.9, s) < 2**s < critical_factor(w_star * 1.1, s)


class TestTwoParticle:
    def test_single_meeting_point(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        k, m, n = 2, 3, 3
        assert twoparticle_bound(k, m, n, p) == pytest.approx(
            one_particle_pathsum(k, m, n, p), rel=1e-14
        )

    def test_geometric_envelope(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        n = 10
        cstar = max(
            one_particle_pathsum(a, b, n, p) * p.rho ** (p.s * (b - a))
            for a in range(n)
            for b in range(a, n + 1)
        )
        for k, m in ((0, 3), (1, 6), (4, 9)):
            envelope = cstar**2 * p.rho ** (-p.s * (m - k)) / (1 - p.rho ** (-2 * p.s))
            assert twoparticle_bound(k, m, n, p) <= envelope

    def test_vanishing_weights(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1e-280)
        assert twoparticle_bound(0, 2, 4, p) < 1e-30

    def test_rejects_bad_ranges(self):
        p = BoundParams(s=0.25, rho=4.0, wbar=1.0)
        with pytest.raises(ValueError):
            twoparticle_bound(3, 3, 5, p)


class TestBoundParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            BoundParams(s=0.5, rho=4.0, wbar=1.0)
        with pytest.raises(ValueError):
            BoundParams(s=0.25, rho=1.0, wbar=1.0)
        with pytest.raises(ValueError):
            BoundParams(s=0.25, rho=4.0, wbar=0.0)

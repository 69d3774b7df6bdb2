import math

import numpy as np
import pytest
import scipy.stats as st

from vrjplab import (
    ArrayGraph,
    LatticeParams,
    NotPositiveDefiniteError,
    UField,
    assemble_H,
    build_finite_box,
    fractional_moment,
    green,
    sample_beta_sequential,
    ufield_from_sample,
    ufield_pinned,
)
from vrjplab.graphs import two_vertex_graph


class TestAssembly:
    def test_single_vertex(self):
        g = ArrayGraph(np.zeros((1, 1)))
        h = assemble_H(np.array([0.7]), g)
        assert h.h.shape == (1, 1) and h.h[0, 0] == pytest.approx(1.4)

    def test_two_vertices(self):
        g = two_vertex_graph(0.8)
        h = assemble_H(np.array([1.0, 2.0]), g)
        assert np.allclose(h.h, [[2.0, -0.8], [-0.8, 4.0]])
        assert np.array_equal(h.h, h.h.T)

    def test_uses_sample_graph(self, box3):
        sample = sample_beta_sequential(box3, 5)
        h = assemble_H(sample)
        assert h.n == box3.n_vertices
        assert np.allclose(np.diag(h.h), 2.0 * sample.beta)


class TestGreen:
    def test_single_vertex_inverse(self):
        g = ArrayGraph(np.zeros((1, 1)))
        gv = green(assemble_H(np.array([0.7]), g))
        assert gv.entry(0, 0) == pytest.approx(1.0 / 1.4)

    def test_two_vertex_closed_form(self):
        g = two_vertex_graph(1.0)
        gv = green(assemble_H(np.array([1.0, 1.0]), g))
        expected = np.array([[2.0, 1.0], [1.0, 2.0]]) / 3.0
        assert np.allclose(gv.matrix(), expected, rtol=1e-12)

    def test_not_positive_definite_rejected(self):
        g = two_vertex_graph(1.0)
        with pytest.raises(NotPositiveDefiniteError):
            green(assemble_H(np.array([0.1, 0.1]), g))

    def test_entries_positive_on_sampled_box(self, rng):
        box = build_finite_box(LatticeParams(rho=4.0, wbar=1.0, n=4))
        for _ in range(10):
            gv = green(assemble_H(sample_beta_sequential(box, rng)))
            assert np.all(gv.column(0) > 0.0)

    def test_residual_contract(self, box3, rng):
        gv = green(assemble_H(sample_beta_sequential(box3, rng)))
        col = gv.column(2)
        e = np.zeros(box3.n_vertices)
        e[2] = 1.0
        resid = np.abs(gv._h @ col - e).max()
        assert resid < 1e-8 * np.abs(col).max()


class TestUField:
    def test_pin_is_exactly_zero(self, box3, rng):
        field = ufield_from_sample(sample_beta_sequential(box3, rng), pin=3)
        assert field.u[3] == 0.0
        assert field.pin == 3

    def test_matches_green_ratio(self, box2, rng):
        sample = sample_beta_sequential(box2, rng)
        gv = green(assemble_H(sample))
        field = ufield_pinned(gv, 1)
        col = gv.column(1)
        assert np.allclose(np.exp(field.u), col / col[1], rtol=1e-12)
        assert field.g_pin == pytest.approx(col[1])

    def test_moment_symmetry(self, box3, rng):
        i, j, s = 0, 5, 0.25
        a_vals, b_vals = [], []
        for _ in range(2500):
            gv = green(assemble_H(sample_beta_sequential(box3, rng)))
            a_vals.append(math.exp(s * ufield_pinned(gv, i).u[j]))
            b_vals.append(math.exp(s * ufield_pinned(gv, j).u[i]))
        a_vals, b_vals = np.array(a_vals), np.array(b_vals)
        se = math.sqrt(a_vals.var() / len(a_vals) + b_vals.var() / len(b_vals))
        assert abs(a_vals.mean() - b_vals.mean()) < 4.0 * se

    def test_pathwise_lower_bound(self, box3, rng):
        w12 = box3.weight(0, 1)
        for _ in range(300):
            sample = sample_beta_sequential(box3, rng)
            field = ufield_from_sample(sample, pin=0)
            assert math.exp(field.u[1]) > w12 / (2.0 * sample.beta[1])


class TestFractionalMoment:
    def _flat_fields(self, n_vertices, count):
        return [
            UField(pin=0, u=np.zeros(n_vertices), g_pin=1.0) for _ in range(count)
        ]

    def test_flat_field_gives_one(self):
        est = fractional_moment(self._flat_fields(4, 16), 0.25, 2)
        assert est.estimate == 1.0 and est.ci_lo == est.ci_hi == 1.0

    def test_rejects_large_exponent(self):
        fields = self._flat_fields(4, 16)
        for s in (0.5, 0.7, 1.0):
            with pytest.raises(ValueError):
                fractional_moment(fields, s, 2)

    def test_rejects_tiny_sample(self):
        with pytest.raises(ValueError):
            fractional_moment(self._flat_fields(4, 7), 0.25, 2)

    def test_block_selector_averages_first(self, box2, rng):
        fields = [ufield_from_sample(sample_beta_sequential(box2, rng)) for _ in range(16)]
        est_block = fractional_moment(fields, 0.25, [0, 1])
        manual = np.array([np.exp(f.u[[0, 1]]).mean() ** 0.25 for f in fields])
        assert est_block.mean == pytest.approx(manual.mean())

    def test_monotone_decay_with_distance(self, rng):
        box = build_finite_box(LatticeParams(rho=4.0, wbar=1.0, n=5))
        fields = [
            ufield_from_sample(sample_beta_sequential(box, rng), pin=0) for _ in range(300)
        ]
        prev_hi = None
        for k in range(1, 6):
            est = fractional_moment(fields, 0.25, 2 ** (k - 1))
            if prev_hi is not None:
                assert est.estimate <= prev_hi * 1.05
            prev_hi = est.ci_hi

    def test_scale_sandwich_with_fitted_constant(self, rng):
        # a decay constant fitted on a small box must dominate the moment on a
        # larger one (factor-2 slack absorbs prefactor drift)
        s, rho = 0.25, 4.0
        means = {}
        for n in (3, 6):
            box = build_finite_box(LatticeParams(rho=rho, wbar=1.0, n=n))
            vals = [
                math.exp(s * ufield_from_sample(sample_beta_sequential(box, rng)).u[0])
                for _ in range(400)
            ]
            means[n] = float(np.mean(vals))
        fitted_c = means[3] * rho ** (s * 3)
        assert means[6] <= 2.0 * fitted_c * rho ** (-s * 6)
        assert means[6] >= 0.5 * fitted_c * rho ** (-s * 6)

    def test_pivot_gamma_law(self, box3, rng):
        gammas = np.array(
            [ufield_from_sample(sample_beta_sequential(box3, rng)).gamma for _ in range(2000)]
        )
        assert st.kstest(gammas, st.gamma(a=0.5).cdf).statistic < 0.04

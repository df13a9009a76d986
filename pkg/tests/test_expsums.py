"""Complete exponential sums: oracles, factorizations, closed forms."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from qdelta.expsums import (
    brute_S,
    brute_S1,
    brute_S1_grid,
    brute_S2,
    brute_S_literal,
    brute_S_reordered,
    calA,
    calS,
    calT1,
    calT2,
    crt_split,
    lemma21_eval,
    sqc_grid,
)
from qdelta.modarith import characters_mod, smooth_part

from conftest import make_instance


@pytest.fixture(scope="module")
def hyp():
    return make_instance()


@pytest.fixture(scope="module")
def cong():
    return make_instance(L=2, lam=(1, 0, 0))


class TestBruteOracles:
    @pytest.mark.parametrize("q", [1, 2, 3, 4, 6])
    def test_three_routes_agree_L1(self, hyp, q):
        for c in ((0, 0, 0), (1, 0, 2), (-1, 3, 1)):
            a = brute_S(hyp, q, c).value
            b = brute_S_literal(hyp, q, c).value
            d = brute_S_reordered(hyp, q, c).value
            assert abs(a - b) < 1e-9
            assert abs(a - d) < 1e-9

    @pytest.mark.parametrize("q", [1, 2, 3, 5])
    def test_three_routes_agree_L2(self, cong, q):
        for c in ((0, 0, 0), (1, 2, 0)):
            a = brute_S(cong, q, c).value
            b = brute_S_literal(cong, q, c).value
            d = brute_S_reordered(cong, q, c).value
            assert abs(a - b) < 1e-9
            assert abs(a - d) < 1e-9

    def test_conjugate_symmetry(self, hyp):
        for q in (3, 4, 7):
            for c in ((1, 2, 0), (2, 1, 1)):
                neg = tuple(-v for v in c)
                assert abs(
                    brute_S(hyp, q, c).value.conjugate() - brute_S(hyp, q, neg).value
                ) < 1e-9


class TestMultiplicativity:
    @pytest.mark.parametrize("q", list(range(1, 41)))
    def test_small_q(self, hyp, q):
        q1, q2 = crt_split(hyp, q)
        assert q1 * q2 == q
        assert smooth_part(q1, hyp.omega) == 1
        for c in ((0, 0, 0), (1, 2, 0)):
            S = brute_S(hyp, q, c).value
            S12 = brute_S1(hyp, q1, q2, c).value * brute_S2(hyp, q1, q2, c).value
            assert abs(S - S12) <= 1e-9 * max(1.0, abs(S))


class TestGrids:
    def test_sqc_grid_matches_brute(self, hyp):
        q = 6
        grid = sqc_grid(hyp, q)
        for c in ((0, 0, 0), (1, 2, 3), (5, 0, 1)):
            assert abs(grid[c] - brute_S(hyp, q, c).value) < 1e-8

    def test_sqc_grid_matches_brute_L2(self, cong):
        q = 3
        grid = sqc_grid(cong, q)
        qL = q * cong.L
        for c in ((0, 0, 0), (1, 0, 2), (4, 5, 1)):
            assert abs(grid[tuple(v % qL for v in c)] - brute_S(cong, q, c).value) < 1e-8

    def test_s1_grid_matches_brute_s1(self, hyp):
        q1, q2 = 7, 2
        grid = brute_S1_grid(hyp, q1, q2)
        for c in itertools.product((0, 1, 3, 6), repeat=3):
            assert abs(grid[c] - brute_S1(hyp, q1, q2, c).value) < 1e-8


class TestLemma21:
    def test_matches_brute_spot(self, hyp):
        for q1 in (3, 7, 11):
            for q2 in (1, 2, 4):
                for c in ((0, 0, 0), (1, -1, 2), (2, 2, 1)):
                    le = lemma21_eval(hyp, q1, q2, c).value
                    br = brute_S1(hyp, q1, q2, c).value
                    assert abs(le - br) <= 1e-6 * q1 * q1, (q1, q2, c)

    def test_matches_brute_nontrivial_lambda(self, cong):
        for q1 in (3, 7, 9):
            for c in ((0, 0, 0), (1, 0, 2)):
                le = lemma21_eval(cong, q1, 2, c).value
                br = brute_S1(cong, q1, 2, c).value
                assert abs(le - br) <= 1e-6 * q1 * q1, (q1, c)

    def test_requires_coprimality(self, hyp):
        with pytest.raises(ValueError):
            brute_S1(hyp, 6, 2, (0, 0, 0))  # q1 not coprime to Omega


class TestCharacterDecomposition:
    def test_scs_identity(self, hyp):
        # S2 with coprime companion x equals the x-twisted complete sum
        for q1, q2 in ((3, 4), (7, 8), (11, 2)):
            for c in ((0, 0, 0), (1, 1, 0)):
                s2 = brute_S2(hyp, q1, q2, c).value
                cs = calS(hyp, q2, q1, c).value
                assert abs(s2 - cs) < 1e-8

    def test_orthogonality_reconstruction(self, hyp):
        for l in (3, 4, 5):
            chars = characters_mod(l * hyp.L**2)
            for x in (1, 2):
                if math.gcd(x, l) != 1:
                    continue
                for c in ((1, 1, 0), (0, 2, 1)):
                    lhs = calS(hyp, l, x, c).value
                    rhs = sum(ch(x) * calA(hyp, l, ch, c).value for ch in chars)
                    assert abs(lhs - rhs) < 1e-8 * max(1.0, abs(lhs))

    def test_cone_factor_trivial_when_p0_absent(self, hyp):
        # q2 with no p0 part: the cone factor is 1 and calT2 carries everything
        q2 = 4
        for x in (1, 3):
            t1 = calT1(hyp, q2, x, (1, 0, 0)).value
            assert abs(t1 - 1.0) < 1e-12

    def test_t1_t2_product(self):
        # p0 = 5 divides q2 = 5: the complete sum factors into cone x rest
        inst = make_instance(coeffs=(1, 1, 1), center=(0.577, 0.577, 0.577))
        q2 = 5
        for x in (1, 2, 3, 4):
            for c in ((0, 0, 0), (1, 2, 0)):
                t1 = calT1(inst, q2, x, c).value
                t2 = calT2(inst, q2, 1, c).value
                cs = calS(inst, q2, x, c).value
                assert abs(t1 * t2 - cs) < 1e-8, (x, c)


class TestBounds:
    def test_brute_rejects_large_modulus(self, hyp):
        with pytest.raises(ValueError, match="bound"):
            brute_S(hyp, 10**5, (0, 0, 0))

    def test_literal_rejects_large_modulus(self, hyp):
        with pytest.raises(ValueError):
            brute_S_literal(hyp, 50, (0, 0, 0))

"""p-adic densities, singular series, and the character L-value."""

from __future__ import annotations

import math
from fractions import Fraction

import pytest

from qdelta.localdens import (
    L_one_psi0,
    count_solutions,
    sigma_p,
    sigma_p0_cone,
    singular_series,
    upsilon,
)
from qdelta.qform import QForm

from conftest import make_instance


@pytest.fixture(scope="module")
def hyp3():
    """Hyperboloid with p0 = 3 (square-discriminant branch)."""
    return make_instance(p0=3)


@pytest.fixture(scope="module")
def sphere5():
    c = 1 / 3**0.5
    return make_instance(coeffs=(1, 1, 1), p0=5, center=(c, c, c))


class TestCountSolutions:
    def test_sphere_mod_3(self):
        # x^2+y^2+z^2 = 1 mod 3: only permutations of (±1, 0, 0) -> 6
        assert count_solutions(QForm.diagonal(1, 1, 1), 1, 3, 1) == 6

    def test_brute_matches_sheets(self):
        form = QForm(1, 2, 3, a12=2)
        for p in (5, 7):
            fast = count_solutions(form, 1, p, 2)
            brute = sum(
                1
                for x in range(p * p)
                for y in range(p * p)
                for z in range(p * p)
                if (form((x, y, z)) - 1) % p**2 == 0
            )
            assert fast == brute

    def test_congruence_restriction(self):
        # solutions of F = 1 mod 9 with x = (1,0,0) mod 3
        form = QForm.diagonal(1, 1, 1)
        direct = sum(
            1
            for x in range(9)
            for y in range(9)
            for z in range(9)
            if (form((x, y, z)) - 1) % 9 == 0
            and x % 3 == 1 and y % 3 == 0 and z % 3 == 0
        )
        assert count_solutions(form, 1, 3, 2, cong_modulus=3, cong_residue=(1, 0, 0)) == direct


class TestSigmaP:
    def test_clean_prime_stabilizes_immediately(self, sphere5):
        d = sigma_p(sphere5, 3)
        assert d.k_star == 1
        assert d.value == Fraction(2, 3)  # 6 solutions mod 3 / 3^2

    def test_ramified_prime_ladder(self, sphere5):
        d = sigma_p(sphere5, 2)
        assert d.certified
        assert d.value == Fraction(3, 2)

    def test_cone_density_hyperboloid(self, hyp3):
        d = sigma_p0_cone(hyp3)
        assert d.value == Fraction(4, 3)

    def test_cone_density_anisotropic_is_zero(self):
        c = 1 / 3**0.5
        inst = make_instance(coeffs=(1, 1, 1), p0=2, L=1, center=(c, c, c))
        assert sigma_p0_cone(inst).value == 0

    def test_densities_positive_for_solvable(self, hyp3):
        for p in (5, 7, 11, 13):
            assert sigma_p(hyp3, p).value > 0


class TestSingularSeries:
    def test_square_branch(self, hyp3):
        s = singular_series(hyp3, p_max=300)
        assert s.square_disc
        assert s.obstructed_at is None
        assert abs(s.value - 0.811) < 0.01
        assert s.drift < 0.01

    def test_nonsquare_branch(self, sphere5):
        s = singular_series(sphere5, p_max=300)
        assert not s.square_disc
        assert s.value > 0

    def test_obstructed(self):
        c = 1 / 3**0.5
        inst = make_instance(
            coeffs=(1, 1, 1), p0=5, L=2, lam=(1, 1, 1), center=(c, c, c)
        )
        s = singular_series(inst, p_max=100)
        assert s.value == 0.0
        assert s.obstructed_at == 2

    def test_upsilon(self):
        assert upsilon(2.0, 1) == 1.0
        assert abs(upsilon(2.0, 12) - 1 / ((1 - 0.25) * (1 - 1 / 9))) < 1e-12


class TestLValue:
    def test_disc_minus_four(self):
        # sphere: disc = -1, fundamental discriminant -4, L(1) = pi/4
        assert abs(L_one_psi0(QForm.diagonal(1, 1, 1), 1) - math.pi / 4) < 1e-8

    def test_disc_minus_three(self):
        # diag(1,1,3), m0 = 1: disc = -3, L(1) = pi / (3 sqrt 3)
        assert abs(
            L_one_psi0(QForm.diagonal(1, 1, 3), 1) - math.pi / (3 * math.sqrt(3))
        ) < 1e-8

    def test_rejects_square_discriminant(self):
        with pytest.raises(ValueError):
            L_one_psi0(QForm.diagonal(1, 1, -1), 1)

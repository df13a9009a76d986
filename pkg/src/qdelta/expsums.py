"""Complete exponential sums for the delta-method expansion.

Ground truth is the definition-level sum S_q(c) over residues sigma mod qL
(with the divisibility condition tested in exact integers), together with its
CRT factors S1/S2, the closed-form evaluation of S1 via Jacobi symbols and
quadratic root sets, and the character averages used to organize the ramified
part.

The unit a-sums are collapsed to Ramanujan sums c_q(m) via the Mobius/gcd
formula; `*_literal` variants keep the raw double loop and serve as oracles
for that collapse.  All vectorized reductions run in a fixed order so results
are reproducible bit-for-bit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy

from .modarith import jacobi, mobius, quadratic_roots, ramanujan_sum, smooth_part
from .qform import ProblemInstance, evaluate

_BRUTE_MODULUS_BOUND = 10**4
_CALS_BOUND = 10**4
_CALA_BOUND = 3000


@dataclass(frozen=True)
class ComplexSum:
    """Value of a finite exponential sum together with its term count."""

    value: complex
    terms: int

    @property
    def re(self) -> float:
        return self.value.real

    @property
    def im(self) -> float:
        return self.value.imag

    def __abs__(self) -> float:
        return abs(self.value)


def _exp_table(n: int) -> np.ndarray:
    """e(k/n) for k = 0..n-1, computed once per modulus."""
    return np.exp(2j * np.pi * np.arange(n) / n)


@lru_cache(maxsize=None)
def _ramanujan_by_gcd(q: int) -> dict[int, int]:
    """c_q(m) depends on m only through gcd(m, q); table over divisors of q."""
    return {d: sum(e * mobius(q // e) for e in sympy.divisors(d)) for d in sympy.divisors(q)}


def _ramanujan_vector(q: int, m: np.ndarray) -> np.ndarray:
    """Vectorized c_q(m) over an integer array m."""
    table = _ramanujan_by_gcd(q)
    g = np.gcd(m % q, q) if q > 1 else np.ones_like(m)
    out = np.zeros(m.shape, dtype=np.int64)
    for d, val in table.items():
        out[g == d] = val
    return out


def _sum_masked_phase(amp: np.ndarray, ph2: np.ndarray, ph3: np.ndarray) -> complex:
    """sum_{s2,s3} amp[s2,s3] * ph2[s2] * ph3[s3], fixed reduction order."""
    inner = amp @ ph3.real + 1j * (amp @ ph3.imag)
    return complex(ph2 @ inner)


@lru_cache(maxsize=None)
def _ramanujan_residue_table(q: int, L2: int) -> np.ndarray:
    """c_q(r // L2) for residues r mod q*L2 with L2 | r, else 0; tiled x3.

    The tiling lets callers index with unreduced sums of three residues in
    [0, q*L2) without a folding pass.
    """
    modulus = q * L2
    r = np.arange(modulus, dtype=np.int64)
    g = np.gcd((r // L2) % q, q)
    vals = np.zeros(modulus, dtype=np.float64)
    for d, val in _ramanujan_by_gcd(q).items():
        vals[g == d] = val
    if L2 > 1:
        vals[r % L2 != 0] = 0.0
    return np.tile(vals, 3)


@lru_cache(maxsize=None)
def _divisible_residue_table(L2: int, modulus: int) -> np.ndarray:
    """Indicator of L2 | r for residues r mod modulus, tiled x3."""
    r = np.arange(modulus, dtype=np.int64)
    return np.tile((r % L2 == 0).astype(np.uint8), 3)


def _scaled_residue_sum(
    form, scale: int, lam, shift: int, modulus: int, size: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residues of the (s2, s3)-only part of F(scale*s + lam) + shift mod modulus.

    Returns (base, x2, x3): base[i, j] is reduced into [0, modulus) and the
    coordinate arrays let the caller add the per-s1 terms (diagonal and cross)
    as reduced row/column vectors, so lookups need a table tiled only x3.
    """
    a11, a22, a33, a12, a13, a23 = form.coefficients()
    s = np.arange(size, dtype=np.int64)
    x2 = scale * s + lam[1]
    x3 = scale * s + lam[2]
    base = (a22 * x2 * x2) % modulus
    base = base[:, None] + ((a33 * x3 * x3 + shift) % modulus)[None, :]
    if a23 != 0:
        base = (base + a23 * np.outer(x2, x3)) % modulus
    else:
        base[base >= modulus] -= modulus
    return base.astype(np.int64), x2, x3


def crt_split(instance: ProblemInstance, q: int) -> tuple[int, int]:
    """q = q1 * q2 with q2 the Omega-part of q and gcd(q1, q2*Omega) = 1."""
    if q < 1:
        raise ValueError("q must be positive")
    q2 = smooth_part(q, instance.omega)
    return q // q2, q2


def _check_modulus(modulus: int) -> None:
    if modulus > _BRUTE_MODULUS_BOUND:
        raise ValueError(f"modulus {modulus} exceeds brute-force bound {_BRUTE_MODULUS_BOUND}")


def brute_S(instance: ProblemInstance, q: int, c) -> ComplexSum:
    """Definition-level S_q(c): a mod q coprime, sigma mod qL with
    L^2 | F(L sigma + lam_N) - m0 N, summand e_{qL}(a (F(..)-m0N)/L + c.sigma).

    The a-sum is a Ramanujan sum (see `brute_S_literal` for the raw loop).
    """
    L = instance.L
    qL = q * L
    _check_modulus(qL)
    c = tuple(int(v) % qL for v in c)
    lam = instance.lam_N
    mN = instance.mN
    L2 = L * L
    tab = _exp_table(qL)
    ph2 = tab[(c[1] * np.arange(qL)) % qL]
    ph3 = tab[(c[2] * np.arange(qL)) % qL]
    modulus = q * L2
    base, x2, x3 = _scaled_residue_sum(instance.form, L, lam, -mN, modulus, qL)
    ramanujan = _ramanujan_residue_table(q, L2)
    divisible = _divisible_residue_table(L2, modulus) if L2 > 1 else None
    a11, _, _, a12, a13, _ = instance.form.coefficients()
    total = 0j
    nsol = 0
    for s1 in range(qL):
        x1 = L * s1 + lam[0]
        row = (base + ((a11 * x1 * x1 + a12 * x1 * x2) % modulus)[:, None]) + (
            (a13 * x1 * x3) % modulus
        )[None, :]
        amp = ramanujan[row]
        if divisible is None:
            nsol += qL * qL
        else:
            nsol += int(divisible[row].sum())
        total += tab[(c[0] * s1) % qL] * _sum_masked_phase(amp, ph2, ph3)
    phi = int(sympy.totient(q))
    return ComplexSum(total, phi * nsol)


def brute_S_literal(instance: ProblemInstance, q: int, c) -> ComplexSum:
    """Raw double loop over sigma (lexicographic) and a; oracle for brute_S."""
    L = instance.L
    qL = q * L
    if qL > 40:
        raise ValueError("literal loop reserved for small moduli")
    lam = instance.lam_N
    mN = instance.mN
    tab = [cmath.exp(2j * cmath.pi * k / qL) for k in range(qL)]
    coprime = [a for a in range(q) if math.gcd(a, q) == 1]
    total = 0j
    terms = 0
    for s1 in range(qL):
        for s2 in range(qL):
            for s3 in range(qL):
                g = evaluate(instance.form, (L * s1 + lam[0], L * s2 + lam[1], L * s3 + lam[2])) - mN
                if g % (L * L) != 0:
                    continue
                cdot = (c[0] * s1 + c[1] * s2 + c[2] * s3) % qL
                gl = g // L
                for a in coprime:
                    total += tab[(a * gl + cdot) % qL]
                    terms += 1
    return ComplexSum(total, terms)


def brute_S_reordered(instance: ProblemInstance, q: int, c) -> ComplexSum:
    """Same sum with the a-loop outermost and direct exponentials; independent
    reimplementation used as a cross-check."""
    L = instance.L
    qL = q * L
    if qL > 40:
        raise ValueError("literal loop reserved for small moduli")
    lam = instance.lam_N
    mN = instance.mN
    total = 0j
    terms = 0
    for a in range(q):
        if math.gcd(a, q) != 1:
            continue
        for s1 in range(qL):
            for s2 in range(qL):
                for s3 in range(qL):
                    g = evaluate(instance.form, (L * s1 + lam[0], L * s2 + lam[1], L * s3 + lam[2])) - mN
                    if g % (L * L) != 0:
                        continue
                    arg = a * (g // L) + c[0] * s1 + c[1] * s2 + c[2] * s3
                    total += cmath.exp(2j * cmath.pi * (arg % qL) / qL)
                    terms += 1
    return ComplexSum(total, terms)


def brute_S1(instance: ProblemInstance, q1: int, q2: int, c) -> ComplexSum:
    """Definition-level S1: sigma mod q1, a1 mod q1 coprime,
    e_{q1}(a1 (F(q2 L^2 sigma + lam_N) - m0 N) + c.sigma)."""
    _check_modulus(q1)
    if math.gcd(q1, q2 * abs(instance.omega)) != 1:
        raise ValueError("require gcd(q1, q2*Omega) = 1")
    L2 = instance.L * instance.L
    lam = instance.lam_N
    mN = instance.mN
    c = tuple(int(v) % q1 for v in c)
    tab = _exp_table(q1)
    ph2 = tab[(c[1] * np.arange(q1)) % q1]
    ph3 = tab[(c[2] * np.arange(q1)) % q1]
    scale = q2 * L2
    base, x2, x3 = _scaled_residue_sum(instance.form, scale, lam, -mN, q1, q1)
    ramanujan = _ramanujan_residue_table(q1, 1)
    a11, _, _, a12, a13, _ = instance.form.coefficients()
    total = 0j
    for s1 in range(q1):
        x1 = scale * s1 + lam[0]
        row = (base + ((a11 * x1 * x1 + a12 * x1 * x2) % q1)[:, None]) + (
            (a13 * x1 * x3) % q1
        )[None, :]
        amp = ramanujan[row]
        total += tab[(c[0] * s1) % q1] * _sum_masked_phase(amp, ph2, ph3)
    phi = int(sympy.totient(q1))
    return ComplexSum(total, phi * q1**3)


def brute_S1_grid(instance: ProblemInstance, q1: int, q2: int) -> np.ndarray:
    """S1 for every c mod q1 at once (FFT over the sigma grid)."""
    _check_modulus(q1)
    L2 = instance.L * instance.L
    lam = instance.lam_N
    mN = instance.mN
    r = np.arange(q1, dtype=np.int64)
    s1, s2, s3 = np.meshgrid(r, r, r, indexing="ij")
    g = _form_rows_full(instance.form, q2 * L2 * s1 + lam[0], q2 * L2 * s2 + lam[1], q2 * L2 * s3 + lam[2]) - mN
    amp = _ramanujan_vector(q1, g).astype(np.float64)
    return np.conj(np.fft.fftn(amp))


def _form_rows_full(form, x1, x2, x3):
    a11, a22, a33, a12, a13, a23 = form.coefficients()
    return (
        a11 * x1 * x1 + a22 * x2 * x2 + a33 * x3 * x3
        + a12 * x1 * x2 + a13 * x1 * x3 + a23 * x2 * x3
    )


def brute_S2(instance: ProblemInstance, q1: int, q2: int, c) -> ComplexSum:
    """Definition-level S2: sigma mod q2 L with L^2 | F(L q1 sigma + lam_N) - m0 N,
    a2 mod q2 coprime, e_{q2 L}(a2 (...)/L + c.sigma)."""
    L = instance.L
    q2L = q2 * L
    _check_modulus(q2L)
    if math.gcd(q1, q2 * abs(instance.omega)) != 1:
        raise ValueError("require gcd(q1, q2*Omega) = 1")
    lam = instance.lam_N
    mN = instance.mN
    L2 = L * L
    c = tuple(int(v) % q2L for v in c)
    tab = _exp_table(q2L)
    ph2 = tab[(c[1] * np.arange(q2L)) % q2L]
    ph3 = tab[(c[2] * np.arange(q2L)) % q2L]
    modulus = q2 * L2
    scale = L * q1
    base, x2, x3 = _scaled_residue_sum(instance.form, scale, lam, -mN, modulus, q2L)
    ramanujan = _ramanujan_residue_table(q2, L2)
    divisible = _divisible_residue_table(L2, modulus) if L2 > 1 else None
    a11, _, _, a12, a13, _ = instance.form.coefficients()
    total = 0j
    nsol = 0
    for s1 in range(q2L):
        x1 = scale * s1 + lam[0]
        row = (base + ((a11 * x1 * x1 + a12 * x1 * x2) % modulus)[:, None]) + (
            (a13 * x1 * x3) % modulus
        )[None, :]
        amp = ramanujan[row]
        if divisible is None:
            nsol += q2L * q2L
        else:
            nsol += int(divisible[row].sum())
        total += tab[(c[0] * s1) % q2L] * _sum_masked_phase(amp, ph2, ph3)
    phi = int(sympy.totient(q2))
    return ComplexSum(total, phi * nsol)


def lemma21_eval(instance: ProblemInstance, q1: int, q2: int, c) -> ComplexSum:
    """Closed form for S1 via Jacobi symbol and the quadratic root sum.

    Requires q1 odd, gcd(q1, m0 N) = 1 and gcd(q1, q2 Omega) = 1.  The root
    sum runs over u = det^{-1} (q2 L^2)^{-1} v mod q1 with
    v^2 = m0 N det F*(c) mod q1; the placement of the (q2 L^2)-inverse is
    fixed by the brute-force oracle (substituting tau = q2 L^2 sigma in the
    definition rescales c by that inverse).
    """
    if q1 % 2 == 0:
        raise ValueError("q1 must be odd (Jacobi symbol domain)")
    if math.gcd(q1, instance.mN) != 1:
        raise ValueError("require gcd(q1, m0*N) = 1")
    if math.gcd(q1, q2 * abs(instance.omega)) != 1:
        raise ValueError("require gcd(q1, q2*Omega) = 1")
    det = instance.form.det()
    L2 = instance.L * instance.L
    lam = instance.lam_N
    c = tuple(int(v) for v in c)
    fstar = evaluate(instance.form.dual(), c)
    if q1 == 1:
        return ComplexSum(1 + 0j, 1)
    inv_q2L2 = pow(q2 * L2, -1, q1)
    inv_det = pow(det % q1, -1, q1)
    disc = (instance.mN * det * fstar) % q1
    roots = quadratic_roots(disc, q1)
    root_sum = sum(
        cmath.exp(2j * cmath.pi * ((inv_det * inv_q2L2 * v) % q1) / q1) for v in roots
    )
    lam_dot_c = lam[0] * c[0] + lam[1] * c[1] + lam[2] * c[2]
    front = cmath.exp(2j * cmath.pi * ((-inv_q2L2 * lam_dot_c) % q1) / q1)
    symbol = jacobi((-instance.mN * det) % q1, q1)
    return ComplexSum(front * q1 * q1 * symbol * root_sum, len(roots))


# ---------------------------------------------------------------------------
# Character-organized ramified sums
# ---------------------------------------------------------------------------


def _cal_grid(instance: ProblemInstance, l: int) -> tuple[np.ndarray, int]:
    """FFT table G with G[k] = sum_beta A(beta) e_{lL^2}(k.beta), where
    A(beta) = c_l((F(beta)-m0N)/L^2) on the congruence locus, else 0."""
    L = instance.L
    mod = l * L * L
    lam = instance.lam_N
    mN = instance.mN
    L2 = L * L
    r = np.arange(mod, dtype=np.int64)
    b1, b2, b3 = np.meshgrid(r, r, r, indexing="ij")
    g = _form_rows_full(instance.form, b1, b2, b3) - mN
    mask = (g % L2 == 0) & (b1 % L == lam[0]) & (b2 % L == lam[1]) & (b3 % L == lam[2])
    amp = np.where(mask, _ramanujan_vector(l, np.where(mask, g // L2, 0)), 0).astype(np.float64)
    return np.conj(np.fft.fftn(amp)), int(mask.sum())


@lru_cache(maxsize=64)
def _cal_grid_cached(instance: ProblemInstance, l: int):
    return _cal_grid(instance, l)


def calS(instance: ProblemInstance, l: int, x: int, c) -> ComplexSum:
    """S_l(x; c): a mod l coprime, beta mod lL^2 on the congruence locus,
    e_{lL^2}(a (F(beta) - m0 N) + xbar c.beta)."""
    L = instance.L
    mod = l * L * L
    if mod > _CALS_BOUND:
        raise ValueError(f"l*L^2 = {mod} exceeds bound {_CALS_BOUND}")
    if math.gcd(x, l * L) != 1:
        raise ValueError("require gcd(x, lL) = 1")
    grid, nsol = _cal_grid_cached(instance, l)
    xinv = pow(x % mod, -1, mod) if mod > 1 else 0
    idx = tuple((xinv * int(v)) % mod for v in c)
    phi_l = int(sympy.totient(l))
    return ComplexSum(complex(grid[idx]), phi_l * nsol)


def calA(instance: ProblemInstance, l: int, chi, c) -> ComplexSum:
    """A_l(chi; c) = phi(lL^2)^{-1} sum_x conj(chi(x)) S_l(x; c)."""
    L = instance.L
    mod = l * L * L
    if mod > _CALA_BOUND:
        raise ValueError(f"l*L^2 = {mod} exceeds bound {_CALA_BOUND}")
    if chi.modulus != mod:
        raise ValueError("character modulus must equal l*L^2")
    grid, nsol = _cal_grid_cached(instance, l)
    total = 0j
    count = 0
    for x in range(1, mod + 1):
        if math.gcd(x, mod) != 1:
            continue
        xinv = pow(x, -1, mod)
        idx = tuple((xinv * int(v)) % mod for v in c)
        total += np.conj(chi(x)) * complex(grid[idx])
        count += 1
    if mod == 1:
        total = complex(grid[0, 0, 0])
        count = 1
    return ComplexSum(total / count, count)


def calT1(instance: ProblemInstance, q2: int, x: int, c) -> ComplexSum:
    """Cone sum over the p0-part of q2: b mod q2_flat coprime, beta mod q2_flat,
    e_{q2_flat}(b F(beta) + xbar c.beta).  Equals 1 when p0 does not divide q2."""
    flat = smooth_part(q2, instance.p0)
    if flat == 1:
        return ComplexSum(1 + 0j, 1)
    _check_modulus(flat)
    if math.gcd(x, flat) != 1:
        raise ValueError("require gcd(x, q2_flat) = 1")
    xinv = pow(x % flat, -1, flat)
    r = np.arange(flat, dtype=np.int64)
    b1, b2, b3 = np.meshgrid(r, r, r, indexing="ij")
    g = _form_rows_full(instance.form, b1, b2, b3)
    amp = _ramanujan_vector(flat, g).astype(np.float64)
    tab = _exp_table(flat)
    phase = tab[((xinv * (c[0] * b1 + c[1] * b2 + c[2] * b3)) % flat)]
    val = complex(np.sum(amp * phase))
    phi = int(sympy.totient(flat))
    return ComplexSum(val, phi * flat**3)


def calT2(instance: ProblemInstance, q2: int, x: int, c) -> ComplexSum:
    """N-free ramified sum over q2_nat = q2 / (p0-part): b mod q2_nat coprime,
    beta mod q2_nat L^2 with F(beta) = m0 mod L^2 and beta = lam mod L,
    e_{q2_nat L^2}(b (F(beta) - m0) + xbar c.beta).  Independent of h."""
    flat = smooth_part(q2, instance.p0)
    nat = q2 // flat
    L = instance.L
    mod = nat * L * L
    _check_modulus(mod)
    if math.gcd(x, mod) != 1:
        raise ValueError("require gcd(x, q2_nat L^2) = 1")
    lam = instance.cong.lam
    m0 = instance.m0
    L2 = L * L
    xinv = pow(x % mod, -1, mod) if mod > 1 else 0
    r = np.arange(mod, dtype=np.int64)
    b1, b2, b3 = np.meshgrid(r, r, r, indexing="ij")
    g = _form_rows_full(instance.form, b1, b2, b3) - m0
    mask = (g % L2 == 0) & (b1 % L == lam[0]) & (b2 % L == lam[1]) & (b3 % L == lam[2])
    amp = np.where(mask, _ramanujan_vector(nat, np.where(mask, g // L2, 0)), 0).astype(np.float64)
    tab = _exp_table(mod)
    phase = tab[((xinv * (c[0] * b1 + c[1] * b2 + c[2] * b3)) % mod)]
    val = complex(np.sum(amp * phase))
    phi = int(sympy.totient(nat))
    return ComplexSum(val, phi * int(mask.sum()))


def ord_p(n: int, p: int) -> int:
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def sqc_grid(instance: ProblemInstance, q: int) -> np.ndarray:
    """S_q(c) for all c mod qL as a (qL)^3 array (FFT route).

    Same values as brute_S; used by the Poisson assembly where every c on a
    truncation window is needed for each q.
    """
    L = instance.L
    qL = q * L
    _check_modulus(qL)
    lam = instance.lam_N
    mN = instance.mN
    L2 = L * L
    r = np.arange(qL, dtype=np.int64)
    s1, s2, s3 = np.meshgrid(r, r, r, indexing="ij")
    g = _form_rows_full(instance.form, L * s1 + lam[0], L * s2 + lam[1], L * s3 + lam[2]) - mN
    mask = g % L2 == 0
    amp = np.where(mask, _ramanujan_vector(q, np.where(mask, g // L2, 0)), 0).astype(np.float64)
    return np.conj(np.fft.fftn(amp))

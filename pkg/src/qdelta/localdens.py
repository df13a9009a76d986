"""p-adic local densities, the modified singular series, and L(1, psi0).

Densities are exact rationals: counts of solutions of F = m0 mod p^k under
the congruence condition, divided by p^(2k).  Stabilization is certified
rather than assumed: at primes not dividing 2*det*m0*L every mod-p solution
is nonsingular, so level 1 is already exact; at the remaining primes the
ladder climbs until two consecutive levels agree, the level clears the
ramification threshold, and every surviving solution is Hensel-liftable.

The cone density at p0 uses the homogeneous structure: the count splits into
primitive solutions (whose density stabilizes) plus p^3 times the count two
levels down, which sums to a geometric factor p/(p-1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import sympy

from .modarith import euler_phi, factorize, is_square, jacobi, primes_up_to
from .qform import ProblemInstance, QForm, RealCharacter, psi0

_BOX_BOUND = 10**4  # largest p^k enumerated directly
_CELL_BUDGET = 3 * 10**8


@dataclass(frozen=True)
class LocalDensity:
    """Stabilized density with its certificate data."""

    p: int
    k_star: int
    value: Fraction
    count: int  # solutions mod p^k_star
    counts: tuple[tuple[int, int], ...]  # (k, count) ladder actually computed
    certified: bool
    method: str

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("density must be nonnegative")


@dataclass(frozen=True)
class SingularSeries:
    """Truncated Euler product of convergence-factored local densities."""

    square_disc: bool
    p_max: int
    value: float
    factors: tuple[tuple[int, float], ...]  # (p, euler factor) ascending
    drift: float  # change over the last decade of primes (tail proxy)
    obstructed_at: int | None  # prime with sigma_p = 0, if any


# ---------------------------------------------------------------------------
# Counting solutions of F = target mod p^k
# ---------------------------------------------------------------------------


def _sqrt_count_table(p: int, k: int) -> "np.ndarray":
    """count[d] = #{u mod p^k : u^2 = d mod p^k} for odd p, vectorizable."""
    pk = p**k
    table = np.zeros(pk, dtype=np.int64)
    u = np.arange(pk, dtype=np.int64)
    np.add.at(table, (u * u) % pk, 1)
    return table


def _count_sheets(form: QForm, target: int, p: int, k: int) -> int:
    """Count {F = target mod p^k} by completing the square in a coordinate
    whose diagonal coefficient is a unit mod p (odd p only).

    For unit a and odd p, a x^2 + b x + c = 0 mod p^k has as many roots as
    u^2 = b^2 - 4ac does, via u = 2ax + b.
    """
    if p == 2:
        raise ValueError("sheet counting requires odd p")
    coeffs = form.coefficients()
    diag = coeffs[:3]
    axis = next((i for i in range(3) if diag[i] % p != 0), None)
    if axis is None:
        raise ValueError("no unit diagonal coefficient; use direct counting")
    # permute so the unit-diagonal variable is x3
    perm = {0: (1, 2, 0), 1: (0, 2, 1), 2: (0, 1, 2)}[axis]
    a11, a22, a33, a12, a13, a23 = coeffs
    mat = form.gram()
    m = [[mat[perm[i]][perm[j]] for j in range(3)] for i in range(3)]
    b11, b22, b33 = m[0][0], m[1][1], m[2][2]
    b12, b13, b23 = 2 * m[0][1], 2 * m[0][2], 2 * m[1][2]
    pk = p**k
    table = _sqrt_count_table(p, k)
    x1 = np.arange(pk, dtype=np.int64)
    total = 0
    for v2 in range(pk):
        bb = (b13 * x1 + b23 * v2) % pk
        cc = (b11 * x1 * x1 + b12 * x1 * v2 + b22 * v2 * v2 - target) % pk
        disc = (bb * bb - 4 * b33 * cc) % pk
        total += int(table[disc].sum())
    return total


def count_solutions(
    form: QForm,
    target: int,
    p: int,
    k: int,
    cong_modulus: int = 1,
    cong_residue: tuple[int, int, int] = (0, 0, 0),
) -> int:
    """#{x mod p^k : F(x) = target mod p^k, x = residue mod cong_modulus}.

    cong_modulus must be a power of p dividing p^k (1 for no condition).
    Uses sheet counting when available and unconstrained, else a chunked
    direct enumeration.
    """
    pk = p**k
    if cong_modulus > 1 and pk % cong_modulus != 0:
        raise ValueError("congruence modulus must divide p^k")
    if cong_modulus == 1 and p != 2:
        try:
            return _count_sheets(form, target, p, k)
        except ValueError:
            pass
    step = cong_modulus
    per_axis = pk // step
    if per_axis**3 > _CELL_BUDGET:
        raise ValueError(f"enumeration of p^{3 * k} residues exceeds budget")
    r1 = (cong_residue[0] % step) + step * np.arange(per_axis, dtype=np.int64)
    r2 = (cong_residue[1] % step) + step * np.arange(per_axis, dtype=np.int64)
    r3 = (cong_residue[2] % step) + step * np.arange(per_axis, dtype=np.int64)
    a11, a22, a33, a12, a13, a23 = form.coefficients()
    g2, g3 = np.meshgrid(r2, r3, indexing="ij")
    base = (a22 * g2 * g2 + a33 * g3 * g3 + a23 * g2 * g3 - target) % pk
    total = 0
    for x1 in r1:
        val = (base + a11 * x1 * x1 + a12 * x1 * g2 + a13 * x1 * g3) % pk
        total += int((val == 0).sum())
    return total


def _is_clean(instance: ProblemInstance, p: int) -> bool:
    return (2 * instance.form.det() * instance.m0 * instance.L) % p != 0


def _hensel_certified(instance: ProblemInstance, p: int, k: int) -> bool:
    """Every solution mod p^k has a gradient of p-valuation mu with
    k >= 2 mu + 1, so each lifts consistently to all higher levels."""
    pk = p**k
    ell = 0
    L = instance.L
    while L % p == 0:
        L //= p
        ell += 1
    step = p**ell
    lam = tuple(v % step for v in instance.cong.lam)
    form = instance.form
    target = instance.m0 % pk
    for x1 in range(lam[0], pk, step):
        for x2 in range(lam[1], pk, step):
            for x3 in range(lam[2], pk, step):
                if (form((x1, x2, x3)) - target) % pk != 0:
                    continue
                g = form.gradient((x1, x2, x3))
                mu = 0
                while all(gi % p**(mu + 1) == 0 for gi in g):
                    mu += 1
                    if 2 * mu + 1 > k:
                        return False
                if 2 * mu + 1 > k:
                    return False
    return True


def sigma_p(instance: ProblemInstance, p: int) -> LocalDensity:
    """Local density of F = m0 under x = lambda mod p^(ord_p L), at p != p0."""
    if p == instance.p0:
        raise ValueError("use sigma_p0_cone at the distinguished prime")
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not prime")
    ell = 0
    L = instance.L
    while L % p == 0:
        L //= p
        ell += 1
    if _is_clean(instance, p):
        n1 = count_solutions(instance.form, instance.m0, p, 1)
        # mod-p solutions are nonsingular (a singular one would force x = 0
        # and m0 = 0 mod p), so level 1 is exact by Hensel lifting
        return LocalDensity(
            p=p,
            k_star=1,
            value=Fraction(n1, p**2),
            count=n1,
            counts=((1, n1),),
            certified=True,
            method="sheet-hensel",
        )
    threshold = 1
    tmp = 2 * instance.form.det() * instance.L
    while tmp % p == 0:
        tmp //= p
        threshold += 1
    counts: list[tuple[int, int]] = []
    prev: Fraction | None = None
    k = max(1, ell)
    while p**k <= _BOX_BOUND:
        n = count_solutions(instance.form, instance.m0, p, k, p**ell, instance.cong.lam)
        counts.append((k, n))
        val = Fraction(n, p ** (2 * k))
        if prev is not None and val == prev and k - 1 > threshold:
            k_star = k - 1
            certified = counts[-2][1] == 0 or _hensel_certified(instance, p, k_star)
            return LocalDensity(
                p=p,
                k_star=k_star,
                value=prev,
                count=counts[-2][1],
                counts=tuple(counts),
                certified=certified,
                method="ladder",
            )
        prev = val
        k += 1
    raise ValueError(f"no stabilization for p={p} within the enumeration bound")


def sigma_p0_cone(instance: ProblemInstance) -> LocalDensity:
    """Density of the cone F = 0 at p0 via the primitive-solution recurrence.

    N_k = P_k + p^3 N_(k-2) with P_k the primitive count; once P_k/p^(2k)
    stabilizes at rho, the full density is rho * p/(p-1).  rho = 0 detects
    anisotropy over the p0-adics.
    """
    p = instance.p0
    form = instance.form
    threshold = 1
    tmp = 2 * form.det()
    while tmp % p == 0:
        tmp //= p
        threshold += 1
    counts: list[tuple[int, int]] = []
    prev: Fraction | None = None
    k = 1
    while p**k <= _BOX_BOUND:
        total = count_solutions(form, 0, p, k)
        # subtract non-primitive solutions x = p x'
        if k <= 2:
            nonprim = p ** (3 * (k - 1))
        else:
            nonprim = p**3 * count_solutions(form, 0, p, k - 2)
        prim = total - nonprim
        counts.append((k, prim))
        rho = Fraction(prim, p ** (2 * k))
        if prev is not None and rho == prev and k - 1 > threshold:
            value = prev * Fraction(p, p - 1)
            return LocalDensity(
                p=p,
                k_star=k - 1,
                value=value,
                count=counts[-2][1],
                counts=tuple(counts),
                certified=True,
                method="cone-recurrence",
            )
        prev = rho
        k += 1
    raise ValueError(f"no cone stabilization for p0={p} within the enumeration bound")


# ---------------------------------------------------------------------------
# Singular series and the L-value
# ---------------------------------------------------------------------------


def upsilon(kappa: float, n: int) -> float:
    """The arithmetic function prod_{p | n} (1 - p^-kappa)^-1 (monitor helper)."""
    if n < 1:
        raise ValueError("n must be positive")
    out = 1.0
    for q, _ in factorize(n):
        out /= 1.0 - q ** (-kappa)
    return out


def singular_series(instance: ProblemInstance, p_max: int = 300) -> SingularSeries:
    """Euler product (1 - psi0(p)/p) sigma_p over p <= p_max (psi0 replaced
    by 1 when -m0*det is a square), with the cone density at p0."""
    if p_max > 10**4:
        raise ValueError("prime bound capped at 10^4")
    char = psi0(instance.form, instance.m0)
    square = char.square

    def convergence(p: int) -> float:
        if square:
            return 1.0 - 1.0 / p
        chi = char(p) if p % 2 == 1 and math.gcd(p, 2 * abs(char.disc)) == 1 else 0
        return 1.0 - chi / p

    factors: list[tuple[int, float]] = []
    obstructed: int | None = None
    cone = sigma_p0_cone(instance)
    factors.append((instance.p0, convergence(instance.p0) * float(cone.value)))
    if cone.value == 0:
        obstructed = instance.p0
    for p in primes_up_to(p_max):
        if p == instance.p0:
            continue
        dens = sigma_p(instance, p)
        factors.append((p, convergence(p) * float(dens.value)))
        if dens.value == 0 and obstructed is None:
            obstructed = p
    factors.sort()
    value = 1.0
    for _, f in factors:
        value *= f
    # drift across the last decade of primes as a tail proxy
    cutoff = p_max / 10
    head = 1.0
    for p, f in factors:
        if p <= cutoff:
            head *= f
    drift = abs(value - head)
    return SingularSeries(
        square_disc=square,
        p_max=p_max,
        value=value,
        factors=tuple(factors),
        drift=drift,
        obstructed_at=obstructed,
    )


def _fundamental_character(disc: int) -> tuple[int, RealCharacter]:
    """Conductor f and the character of the quadratic field attached to disc:
    d0 = fundamental discriminant of disc, f = |d0|, values extended to even
    arguments through the Kronecker symbol at 2."""
    if disc == 0 or is_square(disc):
        raise ValueError("principal character has no finite L(1) value")
    d = disc
    square_free = 1
    f2 = 1
    for q, e in factorize(abs(d)):
        if e % 2 == 1:
            square_free *= q
        f2 *= q ** (e // 2)
    square_free *= -1 if d < 0 else 1
    d0 = square_free if square_free % 4 == 1 else 4 * square_free
    return abs(d0), RealCharacter(disc=disc, square=False)


def kronecker_value(d0_abs: int, disc: int, n: int) -> int:
    """Kronecker symbol of the fundamental discriminant attached to disc at n,
    realized as the primitive real character mod d0_abs."""
    n %= d0_abs
    if n == 0 or math.gcd(n, d0_abs) > 1:
        return 0
    # build from Jacobi on the odd part plus the standard value at 2
    d = disc
    square_free = 1
    for q, e in factorize(abs(d)):
        if e % 2 == 1:
            square_free *= q
    square_free *= -1 if d < 0 else 1
    d0 = square_free if square_free % 4 == 1 else 4 * square_free
    val = 1
    m = n
    two = 0
    while m % 2 == 0:
        m //= 2
        two += 1
    if two:
        if d0 % 2 == 0:
            return 0
        # (d0/2) = 1 if d0 = +-1 mod 8 else -1
        val *= (1 if d0 % 8 in (1, 7) else -1) ** two
    if m > 1:
        val *= jacobi(d0 % m if d0 % m else 0, m)
    return val


def L_one_psi0(form: QForm, m0: int, precision: float = 1e-10) -> float:
    """L(1, psi0) for the primitive quadratic character attached to -m0*det(F).

    Direct partial sum to a period multiple M plus the exact digamma tail
    (the Abel-summed remainder of a bounded-partial-sum character series);
    M is doubled until two evaluations agree within the precision.
    """
    from scipy.special import digamma

    disc = -m0 * form.det()
    f, _ = _fundamental_character(disc)
    chi = np.array([kronecker_value(f, disc, a) for a in range(1, f + 1)], dtype=np.float64)
    if abs(chi.sum()) > 1e-9:
        raise ValueError("character is principal; L(1) diverges")

    def eval_at(M: int) -> float:
        n = np.arange(1, M + 1, dtype=np.float64)
        vals = chi[(np.arange(M)) % f]
        head = float(np.sum(vals / n))
        a = np.arange(1, f + 1, dtype=np.float64)
        tail = -float(np.sum(chi * digamma((M + a) / f))) / f
        return head + tail

    M = 8 * f
    prev = eval_at(M)
    for _ in range(20):
        M *= 2
        cur = eval_at(M)
        if abs(cur - prev) <= precision:
            return cur
        prev = cur
    raise RuntimeError("L(1) evaluation did not reach the requested precision")

"""Integral ternary quadratic forms and problem-instance assembly.

F(x) = a11 x1^2 + a22 x2^2 + a33 x3^2 + a12 x1 x2 + a13 x1 x3 + a23 x2 x3,
restricted to classically integral forms (even cross coefficients) so the Gram
determinant is an integer.  The dual form is the adjugate quadratic form; it
drives the classification of Poisson variables into exceptional and ordinary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .modarith import is_square, jacobi

_INT128_MAX = 1 << 127


class CClass(Enum):
    """Classification of a nonzero Poisson variable c."""

    EXCEPTIONAL_TYPE_I = "exceptional-I"   # m0 * det * F*(c) a nonzero square
    EXCEPTIONAL_TYPE_II = "exceptional-II"  # F*(c) = 0
    ORDINARY = "ordinary"


@dataclass(frozen=True)
class QForm:
    """Non-degenerate classically integral ternary quadratic form."""

    a11: int
    a22: int
    a33: int
    a12: int = 0
    a13: int = 0
    a23: int = 0

    def __post_init__(self):
        for name in ("a12", "a13", "a23"):
            if getattr(self, name) % 2 != 0:
                raise ValueError(
                    f"cross coefficient {name}={getattr(self, name)} is odd; "
                    "only classically integral forms (even cross terms) are supported"
                )
        if self.det() == 0:
            raise ValueError("degenerate form: Gram determinant is zero")

    @classmethod
    def diagonal(cls, a: int, b: int, c: int) -> "QForm":
        return cls(a, b, c)

    def gram(self) -> list[list[int]]:
        """Integer Gram matrix M with F(x) = x^T M x."""
        m12, m13, m23 = self.a12 // 2, self.a13 // 2, self.a23 // 2
        return [
            [self.a11, m12, m13],
            [m12, self.a22, m23],
            [m13, m23, self.a33],
        ]

    def det(self) -> int:
        """Gram determinant (the discriminant entering psi0 and Omega)."""
        m = self.gram()
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )

    def adjugate(self) -> list[list[int]]:
        m = self.gram()
        cof = [[0] * 3 for _ in range(3)]
        for i in range(3):
            for j in range(3):
                sub = [
                    [m[r][c] for c in range(3) if c != j]
                    for r in range(3) if r != i
                ]
                cof[i][j] = (-1) ** (i + j) * (
                    sub[0][0] * sub[1][1] - sub[0][1] * sub[1][0]
                )
        # adjugate = transpose of cofactor matrix
        return [[cof[j][i] for j in range(3)] for i in range(3)]

    def __call__(self, x) -> int:
        return evaluate(self, x)

    def gradient(self, x) -> tuple[int, int, int]:
        """Integer gradient of F at x (equals 2 M x)."""
        x1, x2, x3 = (int(v) for v in x)
        return (
            2 * self.a11 * x1 + self.a12 * x2 + self.a13 * x3,
            2 * self.a22 * x2 + self.a12 * x1 + self.a23 * x3,
            2 * self.a33 * x3 + self.a13 * x1 + self.a23 * x2,
        )

    def dual(self) -> "QForm":
        return dual_form(self)

    def coefficients(self) -> tuple[int, int, int, int, int, int]:
        return (self.a11, self.a22, self.a33, self.a12, self.a13, self.a23)


def evaluate(form: QForm, x) -> int:
    """Exact integer value F(x); rejects results beyond 128-bit signed."""
    x1, x2, x3 = (int(v) for v in x)
    val = (
        form.a11 * x1 * x1
        + form.a22 * x2 * x2
        + form.a33 * x3 * x3
        + form.a12 * x1 * x2
        + form.a13 * x1 * x3
        + form.a23 * x2 * x3
    )
    if abs(val) >= _INT128_MAX:
        raise OverflowError("form value exceeds 128-bit signed range")
    return val


def determinant(form: QForm) -> int:
    return form.det()


def dual_form(form: QForm) -> QForm:
    """Dual form F*(c) = c^T adj(M) c; satisfies F*(M x) = det(M) * F(x)."""
    adj = form.adjugate()
    return QForm(
        a11=adj[0][0],
        a22=adj[1][1],
        a33=adj[2][2],
        a12=2 * adj[0][1],
        a13=2 * adj[0][2],
        a23=2 * adj[1][2],
    )


@dataclass(frozen=True)
class RealCharacter:
    """The real character n -> (disc / n): Jacobi symbol on odd n coprime to
    2*disc, zero otherwise.  `square` flags the principal case disc = square."""

    disc: int
    square: bool

    def __call__(self, n: int) -> int:
        n = int(n)
        if n <= 0:
            raise ValueError("character argument must be positive")
        if n % 2 == 0 or math.gcd(n, 2 * abs(self.disc)) > 1:
            return 0
        return jacobi(self.disc, n)


def psi0(form: QForm, m0: int) -> RealCharacter:
    """The real character attached to -m0 * det(F), with its square flag."""
    disc = -m0 * form.det()
    if disc == 0:
        raise ValueError("m0 * det(F) must be nonzero")
    return RealCharacter(disc=disc, square=is_square(disc))


@dataclass(frozen=True)
class CongruenceDatum:
    """Congruence condition x = lam mod L with F(lam) = m0 mod L."""

    L: int
    lam: tuple[int, int, int]

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be a positive integer")
        if any(not 0 <= v < self.L for v in self.lam):
            raise ValueError("lambda entries must be reduced mod L")

    def validate(self, form: QForm, m0: int) -> None:
        if (evaluate(form, self.lam) - m0) % self.L != 0:
            raise ValueError("F(lambda) != m0 mod L")


@dataclass(frozen=True)
class ProblemInstance:
    """Everything the weighted counting function needs.

    N = p0^(2h); lam_N = p0^h * lam mod L; Q = sqrt(N)/L; Omega = 2*L*det(F).
    The weight is any object exposing the WeightSpec interface (see arch).
    """

    form: QForm
    m0: int
    p0: int
    h: int
    cong: CongruenceDatum
    weight: object = None

    def __post_init__(self):
        if self.m0 == 0:
            raise ValueError("m0 must be nonzero")
        if self.h < 0:
            raise ValueError("h must be nonnegative")
        from .modarith import is_prime

        if not is_prime(self.p0):
            raise ValueError(f"p0={self.p0} is not prime")
        if self.cong.L % self.p0 == 0:
            raise ValueError("p0 must not divide L")
        self.cong.validate(self.form, self.m0)

    @property
    def N(self) -> int:
        return self.p0 ** (2 * self.h)

    @property
    def sqrtN(self) -> int:
        return self.p0**self.h

    @property
    def L(self) -> int:
        return self.cong.L

    @property
    def lam_N(self) -> tuple[int, int, int]:
        s = self.sqrtN
        return tuple(s * v % self.L for v in self.cong.lam)

    @property
    def mN(self) -> int:
        return self.m0 * self.N

    @property
    def Q(self) -> Fraction:
        return Fraction(self.sqrtN, self.L)

    @property
    def omega(self) -> int:
        return 2 * self.L * self.form.det()

    def with_h(self, h: int) -> "ProblemInstance":
        return ProblemInstance(self.form, self.m0, self.p0, h, self.cong, self.weight)

    def psi0(self) -> RealCharacter:
        return psi0(self.form, self.m0)


def classify_c(instance: ProblemInstance, c) -> CClass:
    """Exceptional/ordinary trichotomy of a nonzero Poisson variable."""
    c = tuple(int(v) for v in c)
    if c == (0, 0, 0):
        raise ValueError("c must be nonzero")
    fstar = evaluate(instance.form.dual(), c)
    if fstar == 0:
        return CClass.EXCEPTIONAL_TYPE_II
    prod = instance.m0 * instance.form.det() * fstar
    if prod > 0 and is_square(prod):
        return CClass.EXCEPTIONAL_TYPE_I
    return CClass.ORDINARY

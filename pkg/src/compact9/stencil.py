"""Coefficient tables of the sixth-order compact 9-point scheme.

The scheme discretises the scaled transport operator

    -Δu + a_eps u_x + b_eps u_y = f_eps,   a_eps = a/eps, b_eps = b/eps,

at an interior node with

    (1/h^2) sum_{k,l} C_{k,l} u_{i+k, j+l} = F_{i,j},   C_{k,l} = sum_p c_{k,l,p} h^p.

Two coefficient families exist: one for a >= b and one for a <= b. They share
the h^0..h^3 coefficients and coincide entirely when a = b.

All coefficient formulas are written with integer constants only, so passing
``fractions.Fraction`` inputs yields exact rational tables.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np

#: Neighbour offsets in table order; index ``k + 1`` / ``l + 1`` into arrays.
OFFSETS = (-1, 0, 1)
N_POWERS = 7


class DomainError(ValueError):
    """Raised when an input lies outside the region where the scheme is valid."""


class CaseTag(enum.Enum):
    AGE_B = "a>=b"
    ALE_B = "a<=b"


@dataclass(frozen=True)
class ScaledCoefficients:
    """Scaled convection coefficients ``a_eps = a/eps`` and ``b_eps = b/eps``.

    Both must be at least 1; the M-matrix and comparison-function arguments rely
    on it. ``allow_small=True`` downgrades the check to a warning.
    """

    a_eps: float
    b_eps: float
    allow_small: bool = False

    def __post_init__(self):
        for name in ("a_eps", "b_eps"):
            v = getattr(self, name)
            if not v > 0:
                raise DomainError(f"{name} must be positive, got {v}")
            if v < 1:
                msg = f"{name} = {v} violates {name} >= 1"
                if not self.allow_small:
                    raise DomainError(msg)
                warnings.warn(msg + " (override active)", stacklevel=3)

    @classmethod
    def from_problem(cls, eps, a, b, allow_small=False):
        if not (eps > 0 and a > 0 and b > 0):
            raise DomainError(f"eps, a, b must be positive, got {eps}, {a}, {b}")
        return cls(a / eps, b / eps, allow_small)

    def exact(self) -> "ScaledCoefficients":
        """Rational copy of these coefficients (exact binary value of the floats)."""
        return ScaledCoefficients(Fraction(self.a_eps), Fraction(self.b_eps), self.allow_small)


def select_case(a_eps, b_eps) -> CaseTag:
    """Pick the coefficient family; ties go to ``CaseTag.AGE_B``."""
    if a_eps < 1:
        raise DomainError(f"a_eps = {a_eps} violates a_eps >= 1")
    if b_eps < 1:
        raise DomainError(f"b_eps = {b_eps} violates b_eps >= 1")
    return CaseTag.AGE_B if a_eps >= b_eps else CaseTag.ALE_B


def _check_case(sc: ScaledCoefficients, case: CaseTag):
    if case is CaseTag.AGE_B and sc.a_eps < sc.b_eps:
        raise DomainError(f"case a>=b requested with a_eps={sc.a_eps} < b_eps={sc.b_eps}")
    if case is CaseTag.ALE_B and sc.a_eps > sc.b_eps:
        raise DomainError(f"case a<=b requested with a_eps={sc.a_eps} > b_eps={sc.b_eps}")


@dataclass(frozen=True)
class RCoefficients:
    r1: float
    r2: float
    r3: float
    r4: float
    r5: float
    r6: float
    r7: float
    r8: float
    r9: float
    r10: float
    r11: float
    r12: float
    r13: float
    r14: float
    r15: float


def compute_r(sc: ScaledCoefficients) -> RCoefficients:
    a, b = sc.a_eps, sc.b_eps
    r1 = a + b
    return RCoefficients(
        r1=r1,
        r2=a**2 + b**2,
        r3=a * b,
        r4=(14 * a**4 + 33 * a**3 * b + 42 * a**2 * b**2 + 33 * a * b**3 + 10 * b**4) / 240,
        r5=-(19 * a**3 + 30 * a**2 * b + 21 * a * b**2) / 240,
        r6=-(21 * a**2 * b + 30 * a * b**2 + 19 * b**3) / 240,
        r7=(23 * a**2 + 30 * a * b + 21 * b**2) / 240,
        r8=(21 * a**2 + 30 * a * b + 23 * b**2) / 240,
        r9=r1 * a * (5 * a**3 + 9 * a**2 * b + 12 * a * b**2 + 10 * b**3) / 480,
        # printed without the division sign; /480 is required for consistency
        r10=-r1 * a * (9 * a**2 + 10 * a * b + 11 * b**2) / 480,
        r11=-r1 * b * (11 * a**2 + 10 * a * b + 9 * b**2) / 480,
        r12=(13 * a**3 + 23 * a**2 * b + 21 * a * b**2 + 11 * b**3) / 480,
        r13=(11 * a**3 + 21 * a**2 * b + 23 * a * b**2 + 13 * b**3) / 480,
        r14=(8 * a**4 + 33 * a**3 * b + 42 * a**2 * b**2 + 33 * a * b**3 + 16 * b**4) / 240,
        r15=(5 * a**5 - 22 * a**4 * b + 27 * a**3 * b**2 + 16 * a**2 * b**3
             + 4 * a * b**4 + 42 * b**5) / 480,
    )


def _shared_low_powers(a, b):
    """Coefficients of h^0..h^3, common to both families. Keys are (k, l, p)."""
    r1 = a + b
    r2 = a**2 + b**2
    r3 = a * b
    c = {}
    for k in (-1, 1):
        for l in (-1, 1):
            c[k, l, 0] = -1
    for kl in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        c[kl + (0,)] = -4
    c[0, 0, 0] = 20

    c[-1, -1, 1] = -r1
    c[-1, 0, 1] = -2 * (2 * a + b)
    c[-1, 1, 1] = -a
    c[0, -1, 1] = -2 * (a + 2 * b)
    c[0, 0, 1] = 10 * r1
    c[0, 1, 1] = -2 * a
    c[1, -1, 1] = -b
    c[1, 0, 1] = -2 * b
    c[1, 1, 1] = 0

    c[-1, -1, 2] = -r1**2 / 2
    c[-1, 0, 2] = -(41 * a**2 + 40 * a * b + 11 * b**2) / 20
    c[-1, 1, 2] = -a**2 / 2
    c[0, -1, 2] = -(11 * a**2 + 40 * a * b + 41 * b**2) / 20
    c[0, 0, 2] = (21 * r2 + 25 * a * b) / 5
    c[0, 1, 2] = -(11 * a**2 + b**2) / 20
    c[1, -1, 2] = -b**2 / 2
    c[1, 0, 2] = -(a**2 + 11 * b**2) / 20
    c[1, 1, 2] = 0

    c[-1, -1, 3] = -r1**3 / 6
    c[-1, 0, 3] = -(86 * a**3 + 123 * a**2 * b + 66 * a * b**2 + 13 * b**3) / 120
    c[-1, 1, 3] = -a**3 / 6
    c[0, -1, 3] = -(13 * a**3 + 66 * a**2 * b + 123 * a * b**2 + 86 * b**3) / 120
    c[0, 0, 3] = 19 * (a**3 + b**3) / 15 + 21 * r1 * r3 / 10
    c[0, 1, 3] = -(13 * a**3 + 3 * a * b**2) / 120
    c[1, -1, 3] = -b**3 / 6
    c[1, 0, 3] = -(3 * a**2 * b + 13 * b**3) / 120
    c[1, 1, 3] = 0
    return c


def _high_powers_age_b(a, b):
    r1 = a + b
    r2 = a**2 + b**2
    r3 = a * b
    c = {}
    c[-1, -1, 4] = -r1**4 / 24
    c[-1, 0, 4] = -(23 * a**4 + 43 * a**3 * b + 33 * a**2 * b**2 + 13 * a * b**3) / 120
    c[-1, 1, 4] = -a**4 / 24
    c[0, -1, 4] = -(2 * a**4 + 13 * a**3 * b + 33 * a**2 * b**2 + 43 * a * b**3 + 21 * b**4) / 120
    c[0, 0, 4] = (37 * a**4 + 29 * b**4) / 120 + 19 * r2 * r3 / 30 + 4 * r3**2 / 5
    c[0, 1, 4] = (b**4 - a**4) / 60
    c[1, -1, 4] = -b**4 / 24
    c[1, 0, 4] = 0
    c[1, 1, 4] = 0

    c[-1, -1, 5] = (b**5 - 5 * a**5 - 20 * a**4 * b - 39 * a**3 * b**2
                    - 41 * a**2 * b**3 - 16 * a * b**4) / 480
    c[-1, 0, 5] = -(9 * a**5 + 23 * a**4 * b + 23 * a**3 * b**2 + 12 * a**2 * b**3
                    + 4 * a * b**4 + b**5) / 240
    c[-1, 1, 5] = (b**5 - 5 * a**5 + a**3 * b**2 - a**2 * b**3 + 4 * a * b**4) / 480
    c[0, -1, 5] = -r1 * b * (a**2 + a * b + 2 * b**2) * (4 * a + 5 * b) / 240
    c[0, 0, 5] = (14 * a**5 + 37 * a**4 * b + 55 * a**3 * b**2 + 55 * a**2 * b**3
                  + 33 * a * b**4 + 10 * b**5) / 240
    c[0, 1, 5] = c[1, -1, 5] = c[1, 0, 5] = c[1, 1, 5] = 0

    # alpha / a_eps is written out so the exact mode stays polynomial
    alpha = a**2 * r1 * (5 * a**3 + 9 * a**2 * b + 12 * a * b**2 + 10 * b**3) / 1920
    alpha_over_a = a * r1 * (5 * a**3 + 9 * a**2 * b + 12 * a * b**2 + 10 * b**3) / 1920
    c[-1, -1, 6] = -(5 * a + 4 * b) * alpha_over_a
    c[-1, 0, 6] = 4 * (b - a) * alpha_over_a
    c[-1, 1, 6] = -alpha
    c[0, -1, 6] = 0
    c[0, 0, 6] = 20 * alpha
    c[0, 1, 6] = -4 * alpha
    c[1, -1, 6] = -alpha
    c[1, 0, 6] = -4 * alpha
    c[1, 1, 6] = -alpha
    return c


def _high_powers_ale_b(a, b):
    r1 = a + b
    c = {}
    c[-1, -1, 4] = -(9 * a**4 + 40 * a**3 * b + 60 * a**2 * b**2 + 40 * a * b**3 + 11 * b**4) / 240
    c[-1, 0, 4] = -(21 * a**4 + 43 * a**3 * b + 33 * a**2 * b**2 + 13 * a * b**3 + 2 * b**4) / 120
    c[-1, 1, 4] = -(9 * a**4 + b**4) / 240
    c[0, -1, 4] = -(13 * a**3 * b + 33 * a**2 * b**2 + 43 * a * b**3 + 23 * b**4) / 120
    c[0, 0, 4] = (9 * a**4 + 13 * b**4) / 40 + 4 * a**2 * b**2 / 5 + 19 * (a**3 * b + a * b**3) / 30
    c[0, 1, 4] = 0
    c[1, -1, 4] = (a**4 - 11 * b**4) / 240
    c[1, 0, 4] = (a**4 - b**4) / 60
    c[1, 1, 4] = (a**4 - b**4) / 240

    beta = r1 * (b - a) * (a**3 - 6 * a**2 * b + 2 * a * b**2 - 7 * b**3) / 480
    c[-1, -1, 5] = -a * b * r1 * (a**2 + a * b + b**2) / 24
    c[-1, 0, 5] = -(11 * a**5 + 5 * a**4 * b + 25 * a**3 * b**2 + 10 * a**2 * b**3 + 21 * b**5) / 240
    c[-1, 1, 5] = 0
    c[0, -1, 5] = r1 * (5 * b - a) * (2 * a**3 - 6 * a**2 * b + a * b**2 - 6 * b**3) / 240
    c[0, 0, 5] = (18 * a**5 - 29 * a**4 * b + 65 * a**3 * b**2 + 45 * a**2 * b**3
                  + 19 * a * b**4 + 86 * b**5) / 240
    c[0, 1, 5] = 4 * beta
    c[1, -1, 5] = beta
    c[1, 0, 5] = 4 * beta
    c[1, 1, 5] = beta

    lam = (5 * a**5 * b - 22 * a**4 * b**2 + 27 * a**3 * b**3 + 16 * a**2 * b**4
           + 4 * a * b**5 + 42 * b**6)
    c[-1, -1, 6] = (-20 * a**6 + 63 * a**5 * b + 2 * a**4 * b**2 - 199 * a**3 * b**3
                    - 96 * a**2 * b**4 - 188 * a * b**5 - 210 * b**6) / 1920
    c[-1, 0, 6] = 0
    c[-1, 1, 6] = (-5 * a**5 * b + 22 * a**4 * b**2 - 27 * a**3 * b**3 - 16 * a**2 * b**4
                   - 4 * a * b**5 - 42 * b**6) / 1920
    c[0, -1, 6] = (5 * a**6 - 27 * a**5 * b + 49 * a**4 * b**2 - 11 * a**3 * b**3
                   - 12 * a**2 * b**4 + 38 * a * b**5 - 42 * b**6) / 480
    c[0, 0, 6] = lam / 96
    c[0, 1, 6] = -lam / 480
    c[1, -1, 6] = -lam / 1920
    c[1, 0, 6] = -lam / 480
    c[1, 1, 6] = -lam / 1920
    return c


@dataclass(frozen=True)
class StencilTable:
    """Per-power coefficients ``c[k+1, l+1, p]``, shape (3, 3, 7).

    ``c`` is float64 normally, or an object array of Fractions in exact mode.
    """

    c: np.ndarray
    case: CaseTag

    def coefficient(self, k: int, l: int, p: int):
        return self.c[k + 1, l + 1, p]

    @property
    def exact(self) -> bool:
        return self.c.dtype == object


def build_table(sc: ScaledCoefficients, case: CaseTag | None = None,
                exact: bool = False) -> StencilTable:
    """Assemble the 63 coefficients for ``sc`` in the requested family.

    ``case=None`` selects automatically. ``exact=True`` evaluates every entry
    in rational arithmetic.
    """
    if case is None:
        case = CaseTag.AGE_B if sc.a_eps >= sc.b_eps else CaseTag.ALE_B
    _check_case(sc, case)
    if exact:
        a, b = Fraction(sc.a_eps), Fraction(sc.b_eps)
    else:
        a, b = float(sc.a_eps), float(sc.b_eps)

    coeffs = _shared_low_powers(a, b)
    high = _high_powers_age_b if case is CaseTag.AGE_B else _high_powers_ale_b
    coeffs.update(high(a, b))

    c = np.empty((3, 3, N_POWERS), dtype=object if exact else np.float64)
    for (k, l, p), v in coeffs.items():
        c[k + 1, l + 1, p] = Fraction(v) if exact else float(v)
    c.setflags(write=False)
    return StencilTable(c, case)


@dataclass(frozen=True)
class CompactStencil:
    """Collapsed 3x3 stencil ``C[k+1, l+1]`` for mesh size ``h``."""

    C: np.ndarray
    h: float

    @property
    def center(self):
        return self.C[1, 1]

    def row_sum_residual(self) -> float:
        """|sum C| relative to the centre weight."""
        return abs(float(np.sum(self.C))) / abs(float(self.C[1, 1]))


def collapse(table: StencilTable, h) -> CompactStencil:
    """Evaluate ``C_{k,l} = sum_p c_{k,l,p} h^p`` by Horner's rule."""
    if not h > 0:
        raise DomainError(f"mesh size must be positive, got {h}")
    c = table.c
    if table.exact:
        h = Fraction(h)
        C = np.full((3, 3), Fraction(0), dtype=object)
    else:
        C = np.zeros((3, 3))
    for p in range(N_POWERS - 1, -1, -1):
        C = C * h + c[:, :, p]
    return CompactStencil(C, h)


# Derivative orders of f_eps that the right-hand side consumes.
RHS_ORDERS = tuple((m, n) for s in range(5) for m in range(s + 1) for n in (s - m,))


def rhs_value(sc: ScaledCoefficients, case: CaseTag, h,
              fderivs: Mapping[tuple[int, int], object]):
    """Right-hand side ``F_{i,j}`` from the partials of ``f_eps`` at a node.

    ``fderivs[(m, n)]`` holds d^{m+n} f_eps / dx^m dy^n for every m + n <= 4.
    Values may be scalars or numpy arrays (one entry per node).

    The h^4 bracket carries ``(Δ²f + 2 f_xxyy)/60``; without it the scheme is
    only fourth-order consistent.
    """
    missing = [mn for mn in RHS_ORDERS if mn not in fderivs]
    if missing:
        raise ValueError(f"rhs_value needs f_eps partials of orders {missing}")
    _check_case(sc, case)
    a, b = sc.a_eps, sc.b_eps
    r = compute_r(sc)
    d = fderivs
    f0 = d[0, 0]
    grad = a * d[1, 0] + b * d[0, 1]
    lap = d[2, 0] + d[0, 2]
    zeta = (a * d[3, 0] + 2 * b * d[2, 1] + 2 * a * d[1, 2] + b * d[0, 3]) / 60
    bilap_plus = d[4, 0] + 4 * d[2, 2] + d[0, 4]   # Δ²f + 2 f^(2,2)

    if case is CaseTag.AGE_B:
        lead4, lead5 = r.r4, r.r9
    else:
        lead4, lead5 = r.r14, r.r15

    t0 = 6 * f0
    t1 = 3 * r.r1 * f0
    t2 = (21 * r.r2 + 30 * r.r3) * f0 / 20 - grad / 2 + lap / 2
    t3 = r.r1 * ((11 * r.r2 / 40 + r.r3 / 4) * f0 - (grad - lap) / 4)
    t4 = (lead4 * f0 + r.r5 * d[1, 0] + r.r6 * d[0, 1] + r.r7 * d[2, 0]
          + r.r3 * d[1, 1] / 15 + r.r8 * d[0, 2] - 2 * zeta + bilap_plus / 60)
    t5 = (lead5 * f0 + r.r10 * d[1, 0] + r.r11 * d[0, 1] + r.r12 * d[2, 0]
          + r.r1 * r.r3 * d[1, 1] / 30 + r.r13 * d[0, 2] - r.r1 * zeta
          + r.r1 * bilap_plus / 120)
    return t0 + h * (t1 + h * (t2 + h * (t3 + h * (t4 + h * t5))))

"""Numerical checks of the scheme's structural and convergence properties.

Covers the sign and row-sum conditions of the stencil, the lower bound of the
operator applied to the comparison function ``theta``, truncation-order
estimates, Richardson and manufactured-solution convergence studies, and the
monotonicity / discrete maximum principle consequences of the M-matrix.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .assembly import (GridFunction, ProblemSpec, apply_operator, assemble,
                       build_mesh, dirichlet_system, node_rhs)
from .field import as_field, manufactured_source
from .solver import DEFAULT_TOL, Method, solve
from .stencil import (CaseTag, ScaledCoefficients, build_table, collapse,
                      select_case)

NORM_KINDS = ("richardson-diff", "exact-error", "truncation-error")
PLATEAU_FACTOR = 1e3
THREADS_ENV = "COMPACT9_THREADS"


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


# --------------------------------------------------------------------------
# Reports

@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    h: float
    norm: float
    order: float | None = None
    plateau: bool = False


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ConvergenceRow, ...]
    norm_kind: str
    problem: str = ""

    def __post_init__(self):
        if self.norm_kind not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.norm_kind!r}")
        object.__setattr__(self, "rows", tuple(self.rows))

    @property
    def orders(self) -> list[float]:
        return [r.order for r in self.rows if r.order is not None]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "h", "norm", "order"])
        for r in self.rows:
            w.writerow([r.N, repr(r.h), f"{r.norm:.5E}",
                        "" if r.order is None else f"{r.order:.2f}"])
        return buf.getvalue()

    def to_json(self) -> str:
        d = {"problem": self.problem, "norm_kind": self.norm_kind,
             "rows": [asdict(r) for r in self.rows]}
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        d = json.loads(text)
        rows = tuple(ConvergenceRow(**r) for r in d["rows"])
        return cls(rows, d["norm_kind"], d["problem"])

    def table(self) -> str:
        """Human-readable table in the 'norm  order' style."""
        lines = [f"# {self.norm_kind}: {self.problem}",
                 f"{'N':>6} {'h':>12} {'norm':>12} {'order':>6}"]
        for r in self.rows:
            order = "" if r.order is None else f"{r.order:.2f}"
            flag = "  (rounding plateau)" if r.plateau else ""
            lines.append(f"{r.N:>6} {r.h:>12.6g} {r.norm:>12.5E} {order:>6}{flag}")
        return "\n".join(lines)


def load_report(path):
    """Read a ConvergenceReport or StructureReport written by ``to_json``."""
    with open(path) as fh:
        text = fh.read()
    if "norm_kind" in json.loads(text):
        return ConvergenceReport.from_json(text)
    return StructureReport.from_json(text)


def observed_order(coarse: float, fine: float, refinement: float = 2.0) -> float:
    """``log(coarse / fine) / log(refinement)``; log2 of the ratio when h is halved."""
    if coarse <= 0 or fine <= 0:
        return math.nan
    return math.log(coarse / fine) / math.log(refinement)


def _report(Ns, norms, kind, problem, magnitudes=None) -> ConvergenceReport:
    rows = []
    eps = np.finfo(float).eps
    for idx, (N, norm) in enumerate(zip(Ns, norms)):
        order = observed_order(norms[idx - 1], norm, N / Ns[idx - 1]) if idx else None
        mag = 1.0 if magnitudes is None else magnitudes[idx]
        plateau = bool(norm < PLATEAU_FACTOR * eps * mag)
        rows.append(ConvergenceRow(int(N), 1.0 / N, float(norm), order, plateau))
    return ConvergenceReport(tuple(rows), kind, problem)


@dataclass(frozen=True)
class SignViolation:
    k: int
    l: int
    h: float
    a_eps: float
    b_eps: float
    case: str
    value: float


@dataclass
class StructureReport:
    samples: int = 0
    worst_row_sum: float = 0.0
    sign_violations: int = 0
    worst_violation: SignViolation | None = None
    comparison_min: float | None = None
    comparison_min_by_case: dict = field(default_factory=dict)
    monotonicity_min: float | None = None
    max_principle_excess: float | None = None

    def merge(self, other: "StructureReport") -> "StructureReport":
        self.samples += other.samples
        self.worst_row_sum = max(self.worst_row_sum, other.worst_row_sum)
        self.sign_violations += other.sign_violations
        if other.worst_violation is not None and (
                self.worst_violation is None
                or other.worst_violation.value > self.worst_violation.value):
            self.worst_violation = other.worst_violation
        return self

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "StructureReport":
        d = json.loads(text)
        if d.get("worst_violation") is not None:
            d["worst_violation"] = SignViolation(**d["worst_violation"])
        return cls(**d)

    def passed(self, row_tol: float = 1e-12, bound: float = 24.0, bound_tol: float = 1e-9,
               mono_tol: float = 1e-14, mp_tol: float = 1e-12) -> bool:
        ok = self.sign_violations == 0 and self.worst_row_sum <= row_tol
        if self.comparison_min is not None:
            ok &= self.comparison_min >= bound - bound_tol
        if self.monotonicity_min is not None:
            ok &= self.monotonicity_min >= -mono_tol
        if self.max_principle_excess is not None:
            ok &= self.max_principle_excess <= mp_tol
        return bool(ok)


# --------------------------------------------------------------------------
# Stencil structure

def check_structure(sc: ScaledCoefficients, h_samples, case: CaseTag | None = None
                    ) -> StructureReport:
    """Sign pattern and row sums of the collapsed stencil at each sampled h."""
    h_samples = list(h_samples)
    if not h_samples or min(h_samples) <= 0:
        raise ValueError("h_samples must be nonempty and positive")
    if case is None:
        case = select_case(sc.a_eps, sc.b_eps)
    table = build_table(sc, case)
    rep = StructureReport(samples=len(h_samples))
    for h in h_samples:
        st = collapse(table, h)
        C = st.C
        rep.worst_row_sum = max(rep.worst_row_sum, st.row_sum_residual())
        offenders = []
        if not C[1, 1] > 0:
            offenders.append((0, 0, -float(C[1, 1])))
        for k in (-1, 0, 1):
            for l in (-1, 0, 1):
                if (k, l) != (0, 0) and C[k + 1, l + 1] > 0:
                    offenders.append((k, l, float(C[k + 1, l + 1])))
        for k, l, v in offenders:
            rep.sign_violations += 1
            if rep.worst_violation is None or v > rep.worst_violation.value:
                rep.worst_violation = SignViolation(k, l, h, float(sc.a_eps), float(sc.b_eps),
                                                    case.value, v)
    return rep


def structure_sweep(samples: int = 1000, seed: int = 7, coef_range=(1.0, 1e4),
                    h_range=(1e-6, 1e3)) -> StructureReport:
    """Random log-uniform draws of (a_eps, b_eps, h), each checked in both families."""
    rng = np.random.default_rng(seed)
    lo, hi = np.log10(coef_range)
    hlo, hhi = np.log10(h_range)
    rep = StructureReport()
    for _ in range(samples):
        p, q = 10 ** rng.uniform(lo, hi, 2)
        h = 10 ** rng.uniform(hlo, hhi)
        big, small = max(p, q), min(p, q)
        rep.merge(check_structure(ScaledCoefficients(big, small), [h], CaseTag.AGE_B))
        rep.merge(check_structure(ScaledCoefficients(small, big), [h], CaseTag.ALE_B))
    return rep


# --------------------------------------------------------------------------
# Comparison function theta(x, y) = (x - a_eps)^2 + (y - b_eps)^2

def _stencil_moments(table, h):
    """Per-power moments of the stencil, summed in h.

    Returns (sum k C, sum l C, sum (k^2 + l^2) C) each divided by the power of
    h that makes ``-L_h theta`` a polynomial in h without cancellation.
    """
    c = table.c
    k = np.array([-1, 0, 1]).reshape(3, 1)
    l = np.array([-1, 0, 1]).reshape(1, 3)
    mk = [np.sum(k * c[:, :, p]) for p in range(7)]
    ml = [np.sum(l * c[:, :, p]) for p in range(7)]
    mq = [np.sum((k**2 + l**2) * c[:, :, p]) for p in range(7)]
    # sum_kl k c_{kl0} = 0, so mk/h and ml/h start at h^0
    mk_h = sum(mk[p] * h ** (p - 1) for p in range(1, 7))
    ml_h = sum(ml[p] * h ** (p - 1) for p in range(1, 7))
    mq_h = sum(mq[p] * h**p for p in range(7))
    return mk_h, ml_h, mq_h


def comparison_values(sc: ScaledCoefficients, h, x, y, case: CaseTag | None = None):
    """``-(1/h^2) sum_kl C_kl theta(x + k h, y + l h)`` at points (x, y).

    Uses the exact quadratic expansion of theta around (x, y), so the zero row
    sum cancels analytically instead of in floating point.
    """
    if case is None:
        case = select_case(sc.a_eps, sc.b_eps)
    table = build_table(sc, case)
    mk, ml, mq = _stencil_moments(table, h)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return -(2 * (x - sc.a_eps) * mk + 2 * (y - sc.b_eps) * ml + mq)


def comparison_value_exact(sc: ScaledCoefficients, h, x, y, case: CaseTag | None = None
                           ) -> Fraction:
    """Direct stencil sum in rational arithmetic at one point."""
    if case is None:
        case = select_case(sc.a_eps, sc.b_eps)
    ex = sc.exact()
    table = build_table(ex, case, exact=True)
    h = Fraction(h)
    C = collapse(table, h).C
    x, y = Fraction(x), Fraction(y)
    total = Fraction(0)
    for k in (-1, 0, 1):
        for l in (-1, 0, 1):
            theta = (x + k * h - ex.a_eps) ** 2 + (y + l * h - ex.b_eps) ** 2
            total += C[k + 1, l + 1] * theta
    return -total / h**2


def comparison_bound(sc: ScaledCoefficients, h, N: int, case: CaseTag | None = None) -> float:
    """Minimum of ``-L_h theta`` over the interior nodes of an N-mesh.

    ``h`` is the stencil's mesh parameter and is independent of ``N``, which
    only selects the sample positions.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    mesh = build_mesh(N)
    c = mesh.coords
    I, J = mesh.interior_indices()
    return float(np.min(comparison_values(sc, h, c[I], c[J], case)))


def comparison_sweep(draws: int = 100, seed: int = 7, N: int = 64,
                     hs=(1e-3, 1e-1, 1.0, 10.0), coef_range=(1.0, 1e4)):
    """Minimum comparison bound over random (a_eps, b_eps), per family."""
    rng = np.random.default_rng(seed)
    lo, hi = np.log10(coef_range)
    mins = {CaseTag.AGE_B.value: math.inf, CaseTag.ALE_B.value: math.inf}
    for _ in range(draws):
        p, q = 10 ** rng.uniform(lo, hi, 2)
        sc = ScaledCoefficients(p, q)
        case = select_case(p, q)
        for h in hs:
            mins[case.value] = min(mins[case.value], comparison_bound(sc, h, N, case))
    return mins


# --------------------------------------------------------------------------
# Convergence studies

def _mms_problem(u, eps, a, b, force_case=None) -> ProblemSpec:
    u = as_field(u)
    return ProblemSpec(eps, a, b, manufactured_source(u, eps, a, b), u, force_case=force_case)


def truncation_error(u, eps: float, a: float, b: float, N: int,
                     force_case: CaseTag | None = None) -> float:
    """max over interior nodes of |L_h u - F| for the exact solution ``u``."""
    u = as_field(u)
    problem = _mms_problem(u, eps, a, b, force_case)
    mesh = build_mesh(N)
    stencil = collapse(problem.table, mesh.h)
    lhs = apply_operator(stencil, GridFunction.sample(mesh, u))
    c = mesh.coords
    I, J = mesh.interior_indices()
    F = node_rhs(problem, mesh.h, c[I], c[J])
    return float(np.max(np.abs(lhs - F)))


def truncation_study(u, eps: float, a: float, b: float, N_list,
                     force_case: CaseTag | None = None) -> ConvergenceReport:
    u = as_field(u)
    Ns = sorted(N_list)
    norms = [truncation_error(u, eps, a, b, N, force_case) for N in Ns]
    problem = _mms_problem(u, eps, a, b, force_case)
    # The operator sums C (u_nb - u_c) / h^2, so rounding in it scales with
    # sum|C| * max|u_nb - u_c| / h^2 rather than with |u| itself.
    mags = []
    for N in Ns:
        mesh = build_mesh(N)
        s = collapse(problem.table, mesh.h)
        g = GridFunction.sample(mesh, u).grid
        jump = max(np.max(np.abs(np.diff(g, axis=0))), np.max(np.abs(np.diff(g, axis=1))),
                   np.max(np.abs(g[1:, 1:] - g[:-1, :-1])), np.max(np.abs(g[1:, :-1] - g[:-1, 1:])))
        mags.append(float(np.sum(np.abs(s.C))) / mesh.h**2 * float(jump))
    return _report(Ns, norms, "truncation-error", f"u={u} eps={eps:g} a={a:g} b={b:g}", mags)


def _solve_many(problem, Ns, tol, method):
    def run(N):
        try:
            return solve(assemble(problem, build_mesh(N)), tol, method).solution
        except Exception as err:
            raise type(err)(f"N={N}: {err}") from err
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        return list(pool.map(run, Ns))


def _check_doubling(Ns):
    Ns = sorted(Ns)
    if len(Ns) < 2:
        raise ValueError("need at least two meshes")
    for lo, hi in zip(Ns, Ns[1:]):
        if hi != 2 * lo:
            raise ValueError(f"meshes must double in size, got {lo} then {hi}")
    return Ns


def richardson_diff(coarse: GridFunction, fine: GridFunction) -> float:
    """max over coarse nodes of |u_h - u_{h/2}| at coincident nodes."""
    if fine.N != 2 * coarse.N:
        raise ValueError("fine mesh must halve the coarse mesh size")
    return float(np.max(np.abs(coarse.grid - fine.grid[::2, ::2])))


def richardson_study(problem: ProblemSpec, N_list, tol: float = DEFAULT_TOL,
                     method: Method | str | None = None) -> ConvergenceReport:
    """One row per coarse mesh N holding ||u_N - u_2N||_inf."""
    Ns = _check_doubling(N_list)
    sols = _solve_many(problem, Ns, tol, method)
    norms = [richardson_diff(c, f) for c, f in zip(sols, sols[1:])]
    mags = [float(np.max(np.abs(s.values))) for s in sols[:-1]]
    return _report(Ns[:-1], norms, "richardson-diff", problem.describe(), mags)


def mms_study(u, eps: float, a: float, b: float, N_list, tol: float = DEFAULT_TOL,
              method: Method | str | None = None,
              force_case: CaseTag | None = None) -> ConvergenceReport:
    """Exact max-norm errors against a manufactured solution ``u``."""
    u = as_field(u)
    problem = _mms_problem(u, eps, a, b, force_case)
    Ns = sorted(N_list)
    sols = _solve_many(problem, Ns, tol, method)
    norms, mags = [], []
    for N, s in zip(Ns, sols):
        exact = GridFunction.sample(build_mesh(N), u)
        norms.append(float(np.max(np.abs(exact.values - s.values))))
        mags.append(float(np.max(np.abs(exact.values))))
    label = f"u={u} eps={eps:g} a={a:g} b={b:g} case={problem.case.value}"
    return _report(Ns, norms, "exact-error", label, mags)


# --------------------------------------------------------------------------
# M-matrix consequences

def monotonicity_check(eps=1e-2, a=1.0, b=1e-2, N: int = 16, loads: int = 20,
                       seed: int = 7, method=Method.DIRECT_BANDED) -> float:
    """Smallest solution entry over unit loads at random interior nodes, g = 0.

    Nonnegative for an M-matrix up to rounding.
    """
    problem = ProblemSpec(eps, a, b, "0", "0")
    mesh = build_mesh(N)
    stencil = collapse(problem.table, mesh.h)
    zero = GridFunction(N, np.zeros((N + 1) ** 2))
    rng = np.random.default_rng(seed)
    worst = math.inf
    for node in rng.choice(mesh.n_interior, size=min(loads, mesh.n_interior), replace=False):
        F = np.zeros(mesh.n_interior)
        F[node] = 1.0
        sol = solve(dirichlet_system(stencil, mesh, F, zero), method=method).solution
        worst = min(worst, float(np.min(sol.interior())) / np.max(np.abs(F)))
    return worst


def max_principle_check(eps=1e-2, a=1.0, b=1e-2, N: int = 16, trials: int = 20,
                        seed: int = 7, method=Method.DIRECT_BANDED) -> float:
    """Largest ``max_interior(u) - max_boundary(g)`` over random data with F <= 0.

    F <= 0 means ``-L_h u >= 0`` in the interior, so the excess must not be positive.
    """
    problem = ProblemSpec(eps, a, b, "0", "0")
    mesh = build_mesh(N)
    stencil = collapse(problem.table, mesh.h)
    bmask = mesh.boundary_mask()
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(trials):
        G = np.zeros((N + 1, N + 1))
        G[bmask] = rng.uniform(-1.0, 1.0, bmask.sum())
        F = -rng.uniform(0.0, 10.0, mesh.n_interior)
        sol = solve(dirichlet_system(stencil, mesh, F, GridFunction(N, G)), method=method)
        excess = float(np.max(sol.solution.interior()) - np.max(G[bmask]))
        worst = max(worst, excess)
    return worst


def verify_all(samples: int = 1000, seed: int = 7, comparison_draws: int = 100,
               N: int = 64) -> StructureReport:
    """Structure sweep, comparison bound, monotonicity and maximum principle."""
    rep = structure_sweep(samples, seed)
    mins = comparison_sweep(comparison_draws, seed, N)
    rep.comparison_min_by_case = mins
    rep.comparison_min = min(mins.values())
    mono, excess = [], []
    for a, b in ((1.0, 1e-2), (1e-2, 1.0), (1.0, 1.0)):
        mono.append(monotonicity_check(1e-2, a, b, seed=seed))
        excess.append(max_principle_check(1e-2, a, b, seed=seed))
    rep.monotonicity_min = min(mono)
    rep.max_principle_excess = max(excess)
    return rep

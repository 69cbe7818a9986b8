"""Linear solves for the assembled 9-point system."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import lapack

from .assembly import GridFunction, SparseSystem

DEFAULT_TOL = 1e-13
MAX_SWEEPS = 10**6
BAND_MEMORY_BUDGET = 2 * 1024**3  # bytes of LU band storage before falling back


class Method(enum.Enum):
    DIRECT_BANDED = "direct-banded"
    STATIONARY_ITERATIVE = "stationary-iterative"


class SolverError(RuntimeError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, msg, best_residual, iterations):
        super().__init__(f"{msg} (best relative residual {best_residual:.3e} "
                         f"after {iterations} sweeps)")
        self.best_residual = best_residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolveReport:
    """Outcome of a solve.

    ``rounding_floor`` is eps * ||(|A||x| + |b|)||_inf / ||b||_inf, the smallest
    relative residual a float64 solution vector can be expected to reach. A
    solve succeeds when the residual is below ``max(tol, rounding_floor)``;
    ``floor_limited`` marks successes that needed the floor.
    """

    solution: GridFunction
    relative_residual: float
    method: Method
    iterations: int
    tol: float = DEFAULT_TOL
    rounding_floor: float = 0.0

    @property
    def floor_limited(self) -> bool:
        return self.relative_residual > self.tol


def band_bytes(N: int) -> int:
    """Bytes of LAPACK band storage for the N-mesh system (kl = ku = N)."""
    n = (N - 1) ** 2
    return (3 * N + 1) * n * 8


def auto_method(N: int, budget: int = BAND_MEMORY_BUDGET) -> Method:
    """Banded LU while its storage fits ``budget``, Gauss-Seidel beyond."""
    if band_bytes(N) <= budget:
        return Method.DIRECT_BANDED
    return Method.STATIONARY_ITERATIVE


def residual_norm(system: SparseSystem, u: GridFunction) -> float:
    """``||A u_interior - rhs||_inf``."""
    if u.N != system.mesh.N:
        raise ValueError(f"grid function has N={u.N}, system has N={system.mesh.N}")
    return float(np.max(np.abs(system.matrix @ u.interior() - system.rhs), initial=0.0))


def _relative(res, rhs_norm):
    return res / rhs_norm if rhs_norm > 0 else res


def rounding_floor(system: SparseSystem, x: np.ndarray) -> float:
    b = system.rhs
    bnorm = float(np.max(np.abs(b), initial=0.0))
    scale = float(np.max(abs(system.matrix) @ np.abs(x) + np.abs(b), initial=0.0))
    eps = np.finfo(float).eps
    return eps * scale / bnorm if bnorm > 0 else eps * scale


def _band_storage(system: SparseSystem, kl: int, ku: int) -> np.ndarray:
    A = system.matrix.tocoo()
    n = system.dimension
    ab = np.zeros((2 * kl + ku + 1, n), order="F")
    ab[kl + ku + A.row - A.col, A.col] = A.data
    return ab


def _solve_direct(system: SparseSystem, tol: float, max_refine: int = 4):
    n = system.dimension
    b = system.rhs
    bnorm = float(np.max(np.abs(b), initial=0.0))
    if bnorm == 0:
        return np.zeros(n), 0.0
    kl = ku = min(system.mesh.N, n - 1)
    ab = _band_storage(system, kl, ku)
    lu, piv, info = lapack.dgbtrf(ab, kl, ku, overwrite_ab=True)
    if info > 0:
        raise SolverError(f"zero pivot at row {info - 1}: matrix is not an M-matrix")
    if info < 0:
        raise SolverError(f"dgbtrf rejected argument {-info}")

    def lusolve(rhs):
        x, info = lapack.dgbtrs(lu, kl, ku, rhs, piv)
        if info != 0:
            raise SolverError(f"dgbtrs failed with info={info}")
        return x

    x = lusolve(b)
    r = b - system.matrix @ x
    rel = _relative(np.max(np.abs(r)), bnorm)
    for _ in range(max_refine):
        if rel <= tol:
            break
        x_new = x + lusolve(r)
        r_new = b - system.matrix @ x_new
        rel_new = _relative(np.max(np.abs(r_new)), bnorm)
        if rel_new >= rel:
            break
        x, r, rel = x_new, r_new, rel_new
    return x, rel


@numba.njit(cache=True)
def _sor_sweeps(indptr, indices, data, diag, b, x, omega, nsweeps):
    n = b.shape[0]
    for _ in range(nsweeps):
        for r in range(n):
            s = b[r]
            for p in range(indptr[r], indptr[r + 1]):
                c = indices[p]
                if c != r:
                    s -= data[p] * x[c]
            x[r] = (1.0 - omega) * x[r] + omega * s / diag[r]


# Gauss-Seidel converges for any nonsingular M-matrix; over-relaxation stalls
# on convection-dominated rows at fine meshes.
DEFAULT_OMEGA = 1.0


def _solve_iterative(system: SparseSystem, tol: float, omega=None,
                     max_sweeps: int = MAX_SWEEPS, check_every: int = 10,
                     stall_checks: int = 200):
    A = system.matrix
    b = system.rhs
    bnorm = float(np.max(np.abs(b), initial=0.0))
    x = np.zeros(system.dimension)
    if bnorm == 0:
        return x, 0.0, 0
    omega = DEFAULT_OMEGA if omega is None else omega
    absA = abs(A)
    eps = np.finfo(float).eps
    diag = A.diagonal()
    indptr = A.indptr.astype(np.int64)
    indices = A.indices.astype(np.int64)
    best, since_best, sweeps = math.inf, 0, 0
    while sweeps < max_sweeps:
        k = min(check_every, max_sweeps - sweeps)
        _sor_sweeps(indptr, indices, A.data, diag, b, x, omega, k)
        sweeps += k
        rel = _relative(np.max(np.abs(b - A @ x)), bnorm)
        if not np.isfinite(rel):
            raise ConvergenceError("SOR iteration diverged", best, sweeps)
        floor = eps * np.max(absA @ np.abs(x) + np.abs(b)) / bnorm
        if rel <= max(tol, floor):
            return x, rel, sweeps
        if rel < 0.999 * best:
            best, since_best = rel, 0
        else:
            since_best += 1
            if since_best >= stall_checks:
                raise ConvergenceError("SOR stagnated", best, sweeps)
    raise ConvergenceError(f"SOR did not reach tol={tol:g}", best, sweeps)


def solve(system: SparseSystem, tol: float = DEFAULT_TOL,
          method: Method | str | None = Method.DIRECT_BANDED, omega=None,
          max_sweeps: int = MAX_SWEEPS) -> SolveReport:
    """Solve ``system`` to relative residual ``tol`` (absolute when rhs = 0).

    ``method=None`` picks one with ``auto_method``.
    """
    method = auto_method(system.mesh.N) if method is None else Method(method)
    if not 1e-15 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-15, 1e-6], got {tol:g}")
    if method is Method.DIRECT_BANDED:
        x, rel = _solve_direct(system, tol)
        iterations = 0
        floor = rounding_floor(system, x)
        if rel > max(tol, floor):
            raise SolverError(f"banded solve left relative residual {rel:.3e} > "
                              f"tol={tol:g} (rounding floor {floor:.3e})")
    else:
        x, rel, iterations = _solve_iterative(system, tol, omega, max_sweeps)
    floor = rounding_floor(system, x)
    u = GridFunction.from_interior(system.boundary, x)
    return SolveReport(u, float(rel), method, iterations, tol, floor)

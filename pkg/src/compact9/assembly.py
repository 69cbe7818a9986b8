"""Uniform mesh, grid functions and sparse assembly of the 9-point scheme."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .field import DifferentiableField2D, EvaluationError, as_field
from .stencil import (RHS_ORDERS, CaseTag, CompactStencil, DomainError,
                      ScaledCoefficients, StencilTable, build_table, collapse,
                      rhs_value, select_case)


class AssemblyError(RuntimeError):
    """A field could not be evaluated at some node during assembly."""


@dataclass(frozen=True)
class ProblemSpec:
    """``-eps Δu + a u_x + b u_y = f`` on (0,1)^2 with ``u = g`` on the boundary."""

    eps: float
    a: float
    b: float
    f: DifferentiableField2D
    g: DifferentiableField2D
    allow_small: bool = False
    force_case: CaseTag | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", as_field(self.f))
        object.__setattr__(self, "g", as_field(self.g))
        self.scaled  # validates eps, a, b

    @cached_property
    def scaled(self) -> ScaledCoefficients:
        return ScaledCoefficients.from_problem(self.eps, self.a, self.b, self.allow_small)

    @cached_property
    def case(self) -> CaseTag:
        if self.force_case is not None:
            return self.force_case
        sc = self.scaled
        if self.allow_small:
            return CaseTag.AGE_B if sc.a_eps >= sc.b_eps else CaseTag.ALE_B
        return select_case(sc.a_eps, sc.b_eps)

    @cached_property
    def table(self) -> StencilTable:
        return build_table(self.scaled, self.case)

    @cached_property
    def f_eps(self) -> DifferentiableField2D:
        """``f / eps`` with partials up to order 4 differentiated once."""
        return self.f.scaled(1.0 / self.eps).prepare(4)

    def describe(self) -> str:
        return (f"eps={self.eps:g} a={self.a:g} b={self.b:g} "
                f"f={self.f} g={self.g} case={self.case.value}")


@dataclass(frozen=True)
class Mesh:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"N must be an integer >= 2 (got {self.N}); "
                              "smaller meshes have no interior nodes")

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def coords(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.h

    @property
    def n_interior(self) -> int:
        return (self.N - 1) ** 2

    def node_arrays(self):
        """Full-grid ``(X, Y)`` with shape (N+1, N+1), indexed [j, i]."""
        c = self.coords
        X, Y = np.meshgrid(c, c, indexing="xy")
        return X, Y

    def interior_indices(self):
        """``(I, J)`` of interior nodes in unknown order (j-major, then i)."""
        r = np.arange(1, self.N)
        J, I = np.meshgrid(r, r, indexing="ij")
        return I.ravel(), J.ravel()

    def boundary_mask(self) -> np.ndarray:
        m = np.ones((self.N + 1, self.N + 1), dtype=bool)
        m[1:-1, 1:-1] = False
        return m


def build_mesh(N: int) -> Mesh:
    return Mesh(int(N))


@dataclass(frozen=True)
class GridFunction:
    """Node values in row-major layout: entry ``j*(N+1) + i`` is node (x_i, y_j)."""

    N: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != (self.N + 1) ** 2:
            raise ValueError(f"expected {(self.N + 1) ** 2} values for N={self.N}, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def grid(self) -> np.ndarray:
        """View with shape (N+1, N+1), indexed [j, i]."""
        return self.values.reshape(self.N + 1, self.N + 1)

    def interior(self) -> np.ndarray:
        return self.grid[1:-1, 1:-1].ravel()

    def __getitem__(self, ij):
        i, j = ij
        return self.grid[j, i]

    @classmethod
    def sample(cls, mesh: Mesh, fn) -> "GridFunction":
        X, Y = mesh.node_arrays()
        if isinstance(fn, DifferentiableField2D):
            vals = fn(X, Y)
        else:
            vals = np.broadcast_to(fn(X, Y), X.shape)
        return cls(mesh.N, vals)

    @classmethod
    def from_interior(cls, boundary: "GridFunction", interior) -> "GridFunction":
        N = boundary.N
        g = boundary.grid.copy()
        g[1:-1, 1:-1] = np.asarray(interior).reshape(N - 1, N - 1)
        return cls(N, g)


@dataclass(frozen=True)
class SparseSystem:
    """Interior unknowns in row ``(j-1)(N-1) + (i-1)``; boundary values in ``boundary``."""

    mesh: Mesh
    matrix: sp.csr_matrix
    rhs: np.ndarray
    boundary: GridFunction
    stencil: CompactStencil
    description: str = ""

    @property
    def dimension(self) -> int:
        return self.mesh.n_interior


def _eval_at_nodes(fexpr_eval, X, Y, what):
    try:
        return fexpr_eval(X, Y)
    except EvaluationError as err:
        for x, y in zip(np.ravel(X), np.ravel(Y)):
            try:
                fexpr_eval(x, y)
            except EvaluationError:
                raise AssemblyError(f"cannot evaluate {what} at node "
                                    f"({float(x)!r}, {float(y)!r}): {err}") from err
        raise AssemblyError(f"cannot evaluate {what}: {err}") from err


def node_rhs(problem: ProblemSpec, h: float, X, Y) -> np.ndarray:
    """``F_{i,j}`` at the given points for mesh size ``h``."""
    fe = problem.f_eps
    derivs = {}
    for m, n in RHS_ORDERS:
        derivs[m, n] = np.asarray(
            _eval_at_nodes(lambda x, y: fe(x, y, m, n), X, Y, f"f_eps^({m},{n})"), dtype=float)
    return rhs_value(problem.scaled, problem.case, h, derivs)


def assemble(problem: ProblemSpec, mesh: Mesh) -> SparseSystem:
    """Sparse system for the interior unknowns with the Dirichlet data lifted to the rhs."""
    N, h = mesh.N, mesh.h
    stencil = collapse(problem.table, h)
    c = mesh.coords
    I, J = mesh.interior_indices()
    F = node_rhs(problem, h, c[I], c[J])

    bmask = mesh.boundary_mask()
    X, Y = mesh.node_arrays()
    G = np.zeros((N + 1, N + 1))
    G[bmask] = _eval_at_nodes(problem.g, X[bmask], Y[bmask], "g")
    return dirichlet_system(stencil, mesh, F, GridFunction(N, G), problem.describe())


def dirichlet_system(stencil: CompactStencil, mesh: Mesh, F, boundary: GridFunction,
                     description: str = "") -> SparseSystem:
    """Route ``C/h^2`` into a CSR matrix and lift the boundary values of ``boundary``.

    ``F`` holds the node right-hand sides in unknown order; interior entries of
    ``boundary`` are ignored.
    """
    N, h = mesh.N, stencil.h
    W = stencil.C / h**2
    G = boundary.grid
    I, J = mesh.interior_indices()
    M = N - 1
    row = (J - 1) * M + (I - 1)
    rhs = np.array(F, dtype=float)
    rows, cols, data = [], [], []
    for k in (-1, 0, 1):
        for l in (-1, 0, 1):
            w = W[k + 1, l + 1]
            ii, jj = I + k, J + l
            inside = (ii >= 1) & (ii <= M) & (jj >= 1) & (jj <= M)
            rows.append(row[inside])
            cols.append((jj[inside] - 1) * M + (ii[inside] - 1))
            data.append(np.full(inside.sum(), w))
            out = ~inside
            rhs[out] -= w * G[jj[out], ii[out]]
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(M * M, M * M))
    A.sort_indices()
    bvals = G.copy()
    bvals[1:-1, 1:-1] = 0.0
    return SparseSystem(mesh, A, rhs, GridFunction(N, bvals), stencil, description)


def apply_stencil(stencil: CompactStencil, v: GridFunction, i: int, j: int) -> float:
    """``(1/h^2) sum_{k,l} C_{k,l} v_{i+k, j+l}`` at interior node (i, j).

    Evaluated as ``sum C_{k,l} (v_{i+k,j+l} - v_{i,j})``, which equals the plain
    sum because the weights sum to zero, but keeps constants exact when the
    weights are large.
    """
    N = v.N
    if not (1 <= i <= N - 1 and 1 <= j <= N - 1):
        raise IndexError(f"node ({i}, {j}) is not interior for N={N}")
    block = v.grid[j - 1:j + 2, i - 1:i + 2].T  # [k+1, l+1]
    return float(np.sum(stencil.C * (block - block[1, 1]))) / stencil.h**2


def apply_operator(stencil: CompactStencil, v: GridFunction) -> np.ndarray:
    """``apply_stencil`` at every interior node, returned in unknown order."""
    g = v.grid
    N = v.N
    centre = g[1:N, 1:N]
    out = np.zeros((N - 1, N - 1))
    for k in (-1, 0, 1):
        for l in (-1, 0, 1):
            if (k, l) != (0, 0):
                out += stencil.C[k + 1, l + 1] * (g[1 + l:N + l, 1 + k:N + k] - centre)
    return out.ravel() / stencil.h**2


def write_grid(path, v: GridFunction):
    """Plain-text dump, one ``x y value`` line per node in row-major order."""
    mesh = Mesh(v.N)
    X, Y = mesh.node_arrays()
    np.savetxt(path, np.column_stack([X.ravel(), Y.ravel(), v.values]), fmt="%.17g")


def read_grid(path) -> GridFunction:
    data = np.loadtxt(path, ndmin=2)
    N = int(round(np.sqrt(data.shape[0]))) - 1
    return GridFunction(N, data[:, 2])

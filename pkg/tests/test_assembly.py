import numpy as np
import pytest

from compact9.assembly import (AssemblyError, GridFunction, Mesh, ProblemSpec,
                               apply_operator, apply_stencil, assemble, build_mesh,
                               dirichlet_system, node_rhs, read_grid, write_grid)
from compact9.solver import solve
from compact9.stencil import CaseTag, DomainError, collapse


def _problem(f="sin(pi*x)*sin(pi*y)", g="0", eps=1e-2, a=1.0, b=1e-2, **kw):
    return ProblemSpec(eps, a, b, f, g, **kw)


def test_mesh_validation():
    for N in (0, 1, 2.5):
        with pytest.raises(DomainError):
            Mesh(N)
    m = build_mesh(4)
    assert m.h == 0.25 and m.n_interior == 9
    assert np.array_equal(m.coords, [0, 0.25, 0.5, 0.75, 1.0])


def test_grid_function_layout():
    N = 3
    v = GridFunction(N, np.arange(16.0))
    assert v[1, 2] == 2 * 4 + 1  # entry j*(N+1) + i
    assert np.array_equal(v.interior(), [5.0, 6.0, 9.0, 10.0])
    with pytest.raises(ValueError):
        GridFunction(N, np.arange(15.0))
    with pytest.raises(ValueError):
        GridFunction(1, [0.0, np.nan, 0.0, 0.0])


def test_problem_case_selection():
    assert _problem(a=1.0, b=1e-2).case is CaseTag.AGE_B
    assert _problem(a=1e-2, b=1.0).case is CaseTag.ALE_B
    assert _problem(a=1.0, b=1.0).case is CaseTag.AGE_B
    assert _problem(a=1.0, b=1.0, force_case=CaseTag.ALE_B).case is CaseTag.ALE_B
    with pytest.raises(DomainError):
        _problem(eps=1.0, a=0.5, b=1.0)


def test_single_unknown_system():
    p = _problem(f="1", g="x + y")
    sys_ = assemble(p, build_mesh(2))
    st = collapse(p.table, 0.5)
    W = st.C / 0.25
    assert sys_.matrix.shape == (1, 1)
    assert sys_.matrix[0, 0] == W[1, 1]
    G = np.array([[k * 0.5 + l * 0.5 for l in range(3)] for k in range(3)])
    lift = sum(W[k, l] * G[k, l] for k in range(3) for l in range(3) if (k, l) != (1, 1))
    F = node_rhs(p, 0.5, np.array([0.5]), np.array([0.5]))
    assert sys_.rhs[0] == pytest.approx(F[0] - lift, rel=1e-14)


def test_interior_row_equals_stencil_bitwise():
    p = _problem()
    N = 8
    mesh = build_mesh(N)
    sys_ = assemble(p, mesh)
    W = collapse(p.table, mesh.h).C / mesh.h**2
    i, j = 4, 3
    row = sys_.matrix.getrow((j - 1) * (N - 1) + (i - 1)).toarray().ravel()
    for k in (-1, 0, 1):
        for l in (-1, 0, 1):
            assert row[(j + l - 1) * (N - 1) + (i + k - 1)] == W[k + 1, l + 1]
    assert np.count_nonzero(row) == 9


def test_matrix_is_m_matrix_pattern():
    sys_ = assemble(_problem(), build_mesh(16))
    A = sys_.matrix.toarray()
    assert np.all(np.diag(A) > 0)
    off = A - np.diag(np.diag(A))
    assert np.all(off <= 0)
    assert np.all(A.sum(axis=1) >= -1e-9 * np.diag(A))


def test_constant_solution_reproduced():
    for a, b in ((1.0, 1e-2), (1e-2, 1.0)):
        p = _problem(f="0", g="1", a=a, b=b)
        u = solve(assemble(p, build_mesh(16))).solution
        assert np.max(np.abs(u.values - 1.0)) <= 1e-12


def test_zero_data_gives_zero_rhs():
    sys_ = assemble(_problem(f="0", g="0"), build_mesh(8))
    assert not np.any(sys_.rhs)


def test_apply_operator_matches_matrix_and_lift():
    p = _problem()
    mesh = build_mesh(8)
    st = collapse(p.table, mesh.h)
    rng = np.random.default_rng(0)
    v = GridFunction(8, rng.standard_normal(81))
    sys_ = dirichlet_system(st, mesh, np.zeros(mesh.n_interior), v)
    expected = sys_.matrix @ v.interior() - sys_.rhs
    assert np.allclose(apply_operator(st, v), expected, rtol=1e-12, atol=1e-9)
    assert apply_stencil(st, v, 3, 5) == pytest.approx(expected[(5 - 1) * 7 + 2], rel=1e-12)
    with pytest.raises(IndexError):
        apply_stencil(st, v, 0, 3)


def test_apply_operator_exact_on_constants():
    p = _problem()
    mesh = build_mesh(32)
    st = collapse(p.table, mesh.h)
    assert not np.any(apply_operator(st, GridFunction(32, np.full(33 * 33, 7.25))))


def test_evaluation_failure_names_node():
    with pytest.raises(AssemblyError, match=r"\(0\.5, 0\.25\)"):
        assemble(_problem(f="1/(x - 0.5)"), build_mesh(4))
    with pytest.raises(AssemblyError, match="g"):
        assemble(_problem(g="1/x"), build_mesh(4))


def test_grid_dump_round_trip(tmp_path):
    u = solve(assemble(_problem(), build_mesh(8))).solution
    path = tmp_path / "u.txt"
    write_grid(path, u)
    lines = path.read_text().splitlines()
    assert len(lines) == 81
    x, y, val = lines[11].split()  # j = 1, i = 2
    assert (float(x), float(y)) == (0.25, 0.125)
    back = read_grid(path)
    assert back.N == 8 and np.array_equal(back.values, u.values)

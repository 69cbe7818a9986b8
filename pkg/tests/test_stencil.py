import random
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compact9.stencil import (RHS_ORDERS, CaseTag, DomainError, ScaledCoefficients,
                              build_table, collapse, compute_r, rhs_value,
                              select_case)

from _oracles import Poly, poly_coefficients, random_poly

coef = st.floats(min_value=1.0, max_value=1e4)
mesh_h = st.floats(min_value=1e-6, max_value=1e3)
rational = st.fractions(min_value=1, max_value=200, max_denominator=50)


def _table_for(a, b, exact=False):
    sc = ScaledCoefficients(a, b)
    return sc, build_table(sc, select_case(a, b), exact=exact)


# --------------------------------------------------------------------------
# Scaled coefficients and case selection

def test_from_problem_scales_by_eps():
    sc = ScaledCoefficients.from_problem(1e-2, 1.0, 1e-2)
    assert sc.a_eps == pytest.approx(100.0)
    assert sc.b_eps == pytest.approx(1.0)


def test_small_coefficients_rejected():
    with pytest.raises(DomainError):
        ScaledCoefficients(0.5, 2.0)
    with pytest.raises(DomainError):
        ScaledCoefficients.from_problem(1.0, 0.5, 1.0)


def test_small_coefficients_allowed_with_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sc = ScaledCoefficients(0.5, 2.0, allow_small=True)
    assert sc.a_eps == 0.5
    assert caught


def test_case_selection_and_tie_break():
    assert select_case(3.0, 2.0) is CaseTag.AGE_B
    assert select_case(2.0, 3.0) is CaseTag.ALE_B
    assert select_case(2.0, 2.0) is CaseTag.AGE_B


def test_case_mismatch_rejected():
    with pytest.raises(DomainError):
        build_table(ScaledCoefficients(1.0, 2.0), CaseTag.AGE_B)
    with pytest.raises(DomainError):
        build_table(ScaledCoefficients(2.0, 1.0), CaseTag.ALE_B)


# --------------------------------------------------------------------------
# Frozen values (exact rationals worked out by hand from the r definitions)

def test_r_values_at_unit_coefficients():
    r = compute_r(ScaledCoefficients(Fraction(1), Fraction(1)))
    assert r.r1 == 2 and r.r2 == 2 and r.r3 == 1
    assert r.r4 == Fraction(132, 240)
    assert r.r5 == Fraction(-70, 240)
    assert r.r7 == Fraction(74, 240)
    assert r.r14 == r.r4 and r.r15 == r.r9


def test_r_values_at_two_one():
    r = compute_r(ScaledCoefficients(Fraction(2), Fraction(1)))
    assert (r.r1, r.r2, r.r3) == (3, 5, 2)
    assert r.r4 == Fraction(732, 240)


def test_table_entries_at_unit_coefficients():
    _, t = _table_for(Fraction(1), Fraction(1), exact=True)
    assert t.coefficient(0, 0, 1) == 20
    assert t.coefficient(1, 1, 1) == 0
    assert t.coefficient(-1, -1, 5) == Fraction(-1, 4)
    assert t.c.shape == (3, 3, 7)


def test_collapsed_corner_at_h_one():
    _, t = _table_for(1.0, 1.0)
    C = collapse(t, 1.0).C
    assert C[2, 2] == pytest.approx(-1.0375, abs=1e-14)


def test_rhs_constant_source():
    sc = ScaledCoefficients(1.0, 1.0)
    d = {mn: 0.0 for mn in RHS_ORDERS}
    d[0, 0] = 1.0
    assert rhs_value(sc, CaseTag.AGE_B, 1.0, d) == pytest.approx(17.9, abs=1e-13)
    assert rhs_value(sc, CaseTag.AGE_B, 0.0, d) == 6.0


def test_rhs_requires_all_orders():
    d = {mn: 0.0 for mn in RHS_ORDERS if mn != (2, 2)}
    with pytest.raises(ValueError, match="2, 2"):
        rhs_value(ScaledCoefficients(1.0, 1.0), CaseTag.AGE_B, 0.1, d)


def test_table_is_read_only():
    _, t = _table_for(2.0, 1.0)
    with pytest.raises(ValueError):
        t.c[1, 1, 0] = 0.0


def test_collapse_rejects_nonpositive_h():
    _, t = _table_for(2.0, 1.0)
    for h in (0.0, -0.5):
        with pytest.raises(DomainError):
            collapse(t, h)


# --------------------------------------------------------------------------
# Structural properties

@given(rational, rational)
@settings(max_examples=40, deadline=None)
def test_row_sums_vanish_exactly_per_power(p, q):
    for a, b, case in ((max(p, q), min(p, q), CaseTag.AGE_B),
                       (min(p, q), max(p, q), CaseTag.ALE_B)):
        t = build_table(ScaledCoefficients(a, b), case, exact=True)
        for power in range(7):
            assert sum(t.c[:, :, power].ravel()) == 0


@given(coef, coef, mesh_h)
@settings(max_examples=300, deadline=None)
def test_sign_pattern(p, q, h):
    for a, b, case in ((max(p, q), min(p, q), CaseTag.AGE_B),
                       (min(p, q), max(p, q), CaseTag.ALE_B)):
        st_ = collapse(build_table(ScaledCoefficients(a, b), case), h)
        C = st_.C
        assert C[1, 1] > 0
        off = np.delete(C.ravel(), 4)
        assert np.all(off <= 0)
        assert st_.row_sum_residual() <= 1e-12


@pytest.mark.parametrize("v", [Fraction(1), Fraction(3), Fraction(10), Fraction(7, 2)])
def test_families_agree_when_coefficients_equal(v):
    sc = ScaledCoefficients(v, v)
    t1 = build_table(sc, CaseTag.AGE_B, exact=True)
    t2 = build_table(sc, CaseTag.ALE_B, exact=True)
    assert np.array_equal(t1.c, t2.c)
    rng = random.Random(int(v * 10))
    d = {mn: Fraction(rng.randint(-20, 20), rng.randint(1, 9)) for mn in RHS_ORDERS}
    h = Fraction(1, 7)
    assert rhs_value(sc, CaseTag.AGE_B, h, d) == rhs_value(sc, CaseTag.ALE_B, h, d)


@given(rational, rational)
@settings(max_examples=25, deadline=None)
def test_families_share_low_powers_under_reflection(p, q):
    # Swapping a and b while transposing (k, l) maps one family onto the other
    # for the powers h^0..h^3; the h^4..h^6 corrections are family-specific.
    big, small = max(p, q), min(p, q)
    t1 = build_table(ScaledCoefficients(big, small), CaseTag.AGE_B, exact=True)
    t2 = build_table(ScaledCoefficients(small, big), CaseTag.ALE_B, exact=True)
    for power in range(4):
        assert np.array_equal(t1.c[:, :, power], t2.c[:, :, power].T)


# --------------------------------------------------------------------------
# Exact consistency: h^2 * truncation error is a polynomial in h whose
# coefficients of h^0..h^7 vanish, i.e. the truncation error is O(h^6).

def _h2_truncation_coefficients(a, b, case, u: Poly, x, y):
    sc = ScaledCoefficients(a, b)
    table = build_table(sc, case, exact=True)
    # eps = 1, so f_eps = f = -Δu + a u_x + b u_y
    f = (u.diff(2, 0).scale(-1) + u.diff(0, 2).scale(-1)
         + u.diff(1, 0).scale(a) + u.diff(0, 1).scale(b))
    d = {mn: f.diff(*mn)(x, y) for mn in RHS_ORDERS}

    def h2tau(h):
        C = collapse(table, h).C
        lhs = sum(C[k + 1, l + 1] * u(x + k * h, y + l * h)
                  for k in (-1, 0, 1) for l in (-1, 0, 1))
        return lhs - h * h * rhs_value(sc, case, h, d)

    # C has degree 6 in h and u(x + kh, .) degree 8, so 14 bounds the product
    return poly_coefficients(h2tau, 14)


@pytest.mark.parametrize("a, b, case", [
    (Fraction(3), Fraction(2), CaseTag.AGE_B),
    (Fraction(7, 3), Fraction(5, 2), CaseTag.ALE_B),
    (Fraction(9, 4), Fraction(9, 4), CaseTag.AGE_B),
    (Fraction(1), Fraction(40), CaseTag.ALE_B),
    (Fraction(40), Fraction(1), CaseTag.AGE_B),
])
def test_sixth_order_consistency_exact(a, b, case):
    rng = random.Random(11)
    u = random_poly(rng, 8)
    c = _h2_truncation_coefficients(a, b, case, u, Fraction(1, 3), Fraction(2, 7))
    assert all(v == 0 for v in c[:8])
    assert c[8] != 0

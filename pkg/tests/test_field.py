import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compact9.field import (Const, DifferentiableField2D, EvaluationError, ParseError,
                            Var, differentiate, evaluate, manufactured_source, parse)

from _oracles import fd_partial, random_expression


# --------------------------------------------------------------------------
# Parsing and printing

@pytest.mark.parametrize("text, x, y, expected", [
    ("x", 0.3, 0.7, 0.3),
    ("1 + 2*3", 0, 0, 7.0),
    ("(2^3)^2", 0, 0, 64.0),
    ("-x^2", 3.0, 0, -9.0),
    ("(-x)^2", 3.0, 0, 9.0),
    ("x - y - 1", 5.0, 2.0, 2.0),
    ("x/y/2", 8.0, 2.0, 2.0),
    ("sin(pi*x)*sin(pi*y)", 0.5, 0.5, 1.0),
    ("exp(x+2*y)", 0.1, 0.2, math.exp(0.5)),
    ("1.5e-1*x", 2.0, 0, 0.3),
    ("--x", 2.0, 0, 2.0),
])
def test_parse_and_evaluate(text, x, y, expected):
    assert evaluate(parse(text), x, y) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("text, offset", [
    ("sin(pi*x", 8),
    ("x +", 3),
    ("x ^ 1.5", 4),
    ("x ^ y", 4),
    ("2^3^1", 3),
    ("tan(x)", 0),
    ("x $ y", 2),
    ("x / 0", 4),
    ("(x))", 3),
    ("", 0),
])
def test_parse_errors_report_offset(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset
    assert info.value.expected


def test_constants_fold():
    assert parse("2*3 + 1") == Const(7.0)
    assert parse("0*sin(x) + y") == Var("y")
    assert parse("x^0") == Const(1.0)
    assert parse("1*x + 0") == Var("x")


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=200, deadline=None)
def test_print_parse_round_trip(seed):
    e = parse(random_expression(random.Random(seed)))
    assert parse(str(e)) == e


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=100, deadline=None)
def test_printed_form_evaluates_identically(seed):
    e = parse(random_expression(random.Random(seed)))
    x = np.linspace(0.05, 0.95, 7)
    assert np.array_equal(evaluate(parse(str(e)), x, x[::-1]), evaluate(e, x, x[::-1]))


# --------------------------------------------------------------------------
# Differentiation

@pytest.mark.parametrize("text, m, n, x, y, expected", [
    ("sin(pi*x)", 1, 0, 0.25, 0, math.pi * math.cos(math.pi / 4)),
    ("sin(pi*x)", 2, 0, 0.25, 0, -math.pi**2 * math.sin(math.pi / 4)),
    ("x^3*y^2", 2, 1, 0.5, 0.3, 6 * 0.5 * 2 * 0.3),
    ("exp(x+2*y)", 1, 3, 0.1, 0.2, 8 * math.exp(0.5)),
    ("1/x", 1, 0, 2.0, 0, -0.25),
    ("x^8", 4, 0, 1.0, 0, 8 * 7 * 6 * 5),
    ("cos(y)", 0, 4, 0.3, 0.4, math.cos(0.4)),
    ("x*y", 1, 1, 0.3, 0.4, 1.0),
    ("x*y", 2, 0, 0.3, 0.4, 0.0),
])
def test_known_partials(text, m, n, x, y, expected):
    assert evaluate(differentiate(parse(text), m, n), x, y) == pytest.approx(
        expected, rel=1e-14, abs=1e-14)


def test_differentiate_rejects_negative_order():
    with pytest.raises(ValueError):
        differentiate(parse("x"), -1, 0)


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_mixed_partials_commute(seed):
    e = parse(random_expression(random.Random(seed)))
    x, y = 0.37, 0.61
    a = evaluate(differentiate(differentiate(e, 0, 2), 1, 0), x, y)
    b = evaluate(differentiate(e, 1, 2), x, y)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("m, n", [(0, 0), (1, 0), (0, 3), (2, 2), (4, 0), (1, 3)])
def test_difference_oracle_against_closed_form(m, n):
    # d^m/dx^m sin(2x) = 2^m sin(2x + m pi/2), every y-derivative of exp(y) is exp(y)
    x, y = 0.3, 0.6
    exact = 2**m * math.sin(2 * x + m * math.pi / 2) * math.exp(y)
    assert fd_partial("sin(2*x)*exp(y)", x, y, m, n) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("seed", range(12))
def test_partials_match_high_precision_differences(seed):
    rng = random.Random(seed)
    text = random_expression(rng)
    field = DifferentiableField2D(text)
    x, y = rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)
    for m, n in ((1, 0), (0, 1), (2, 1), (2, 2), (0, 4)):
        ref = fd_partial(str(field), x, y, m, n)
        assert abs(field(x, y, m, n) - ref) <= 1e-6 * max(1.0, abs(ref))


# --------------------------------------------------------------------------
# Evaluation and fields

def test_vectorised_evaluation_broadcasts_constants():
    x = np.linspace(0, 1, 5)
    assert np.array_equal(evaluate(parse("3"), x, x), np.full(5, 3.0))


def test_evaluation_errors():
    with pytest.raises(EvaluationError, match="division by zero"):
        evaluate(parse("1/(x - 0.5)"), 0.5, 0.2)
    with pytest.raises(EvaluationError, match="overflow"):
        evaluate(parse("exp(1000*x)"), 1.0, 0.0)
    with pytest.raises(EvaluationError):
        evaluate(parse("1/x"), np.array([0.5, 0.0]), np.array([0.1, 0.1]))


def test_field_caches_partials():
    f = DifferentiableField2D("x^2*y")
    f.prepare(4)
    assert f.partial(1, 1) is f.partial(1, 1)
    assert f(2.0, 3.0, 1, 1) == 4.0
    assert f(2.0, 3.0, 3, 0) == 0.0


def test_scaled_field():
    f = DifferentiableField2D("x*y").scaled(0.5)
    assert f(2.0, 3.0) == 3.0
    assert f(2.0, 3.0, 1, 0) == 1.5


def test_manufactured_source_quadratic():
    f = manufactured_source("x^2 + y^2", 0.1, 2.0, 3.0)
    x, y = 0.3, 0.4
    assert f(x, y) == pytest.approx(-0.1 * 4 + 2 * 2 * x + 3 * 2 * y, rel=1e-15)


def test_manufactured_source_trig():
    f = manufactured_source("sin(pi*x)*sin(pi*y)", 1e-2, 1.0, 1e-2)
    x, y = 0.2, 0.7
    s, c = math.sin, math.cos
    p = math.pi
    expected = (1e-2 * 2 * p**2 * s(p * x) * s(p * y)
                + p * c(p * x) * s(p * y) + 1e-2 * p * s(p * x) * c(p * y))
    assert f(x, y) == pytest.approx(expected, rel=1e-14)


def test_manufactured_source_needs_positive_parameters():
    with pytest.raises(ValueError):
        manufactured_source("x", 0.0, 1.0, 1.0)

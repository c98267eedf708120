import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from levelconf.expr import AnalyticFunction, ExpressionError, NonFiniteValue
from levelconf.roots import circle, find_roots, rectangle_path, winding_count

S34 = math.sqrt(3.4)


def F(text):
    return AnalyticFunction.parse(text)


# ----- evaluation ------------------------------------------------------------

def test_eval_square():
    assert F("z^2")(1 + 1j) == pytest.approx(2j)


def test_eval_sin_half_pi():
    assert F("sin(z)")(math.pi / 2) == pytest.approx(1.0)


def test_eval_model_polynomial_at_vertex():
    # q(w) = w^2 - sqrt(3.4) w at w = sqrt(3.4)/2 is -3.4/4
    assert F("z^2 - sqrt(3.4)*z")(S34 / 2) == pytest.approx(-0.85, abs=1e-14)


def test_derivatives():
    assert F("z^2").eval_deriv(1.0) == pytest.approx(2.0)
    assert F("sin(z)").eval_deriv(0.0) == pytest.approx(1.0)
    assert F("z^2 - sqrt(3.4)*z").eval_deriv(0.0) == pytest.approx(-S34)


def test_overflow_is_reported():
    with pytest.raises(NonFiniteValue):
        F("exp(exp(z))")(10.0)


# ----- grammar ---------------------------------------------------------------

@pytest.mark.parametrize("text,z,want", [
    ("(z-1)*(z+2)^2", 0.5, (0.5 - 1) * 2.5**2),
    ("cos(z) + exp(z)", 0.3, math.cos(0.3) + math.exp(0.3)),
    ("-z^2", 2.0, -4.0),
    ("2.5e-1*z", 4.0, 1.0),
    ("i*z", 1.0, 1j),
])
def test_grammar_values(text, z, want):
    assert F(text)(z) == pytest.approx(want)


def test_division_rejected_with_position():
    with pytest.raises(ExpressionError) as e:
        F("1/z")
    assert e.value.column == 2


@pytest.mark.parametrize("bad", ["z^", "log(z)", "z^-1", "z^1.5", "(z", ""])
def test_bad_expressions(bad):
    with pytest.raises(ExpressionError):
        F(bad)


def test_polynomial_coefficients_cached():
    f = F("(z-1)*(z+2)^2")
    assert f.is_polynomial
    assert np.allclose(f.coefficients, np.poly([1, -2, -2])[::-1])
    assert not F("sin(z)").is_polynomial


def test_text_round_trip():
    f = F("(z-1)*(z+2)^2 + sin(z)")
    g = F(str(f))
    zs = np.array([0.3 + 0.1j, -1.2j, 2.0])
    assert np.allclose(f(zs), g(zs))


@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_derivative_matches_finite_difference(z):
    for text in ("z^3 - 2*z + 1", "sin(z)*z", "exp(z) - cos(2*z)"):
        f = F(text)
        h = 1e-5
        fd = (f(z + h) - f(z - h)) / (2 * h)
        d = f.eval_deriv(z)
        assert abs(fd - d) <= 1e-6 * max(1.0, abs(d))


# ----- roots -----------------------------------------------------------------

def test_roots_simple_pair():
    rs = find_roots(F("z^2-1"), (-2, 2, -2, 2))
    got = sorted((r.location.real, r.multiplicity) for r in rs)
    assert [m for _, m in got] == [1, 1]
    assert got[0][0] == pytest.approx(-1) and got[1][0] == pytest.approx(1)


def test_critical_point_of_model_polynomial():
    rs = find_roots(F("z^2 - sqrt(3.4)*z"), (-3, 3, -3, 3), kind="critical")
    assert len(rs) == 1 and rs[0].multiplicity == 1
    assert rs[0].location == pytest.approx(S34 / 2)
    assert rs[0].kind == "critical"


def test_triple_root():
    rs = find_roots(F("z^3"), (-0.5, 0.5, -0.5, 0.5))
    assert len(rs) == 1 and rs[0].multiplicity == 3
    assert abs(rs[0].location) < 1e-4


def test_winding_examples():
    assert winding_count(F("z"), circle(0, 1)) == 1
    assert winding_count(F("z^2-1"), circle(0, 3)) == 2
    assert winding_count(F("sin(z)"), rectangle_path(-1, 4, -1, 1)) == 2


def test_sine_roots_in_rectangle():
    rs = find_roots(F("sin(z)"), (-1, 4, -1, 1))
    assert sorted(round(r.location.real, 8) for r in rs) == [0.0, round(math.pi, 8)]


@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=6))
def test_winding_equals_degree(roots):
    c = np.poly([complex(a, b) for a, b in roots])[::-1]
    f = AnalyticFunction.from_coefficients(c)
    assert winding_count(f, circle(0, 4, 1024)) == len(roots)


@given(st.integers(0, 10_000))
def test_multiplicities_sum_to_winding(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    roots = rng.uniform(-1.5, 1.5, n) + 1j * rng.uniform(-1.5, 1.5, n)
    f = AnalyticFunction.from_coefficients(np.poly(roots)[::-1])
    box = (-2.03, 2.07, -2.05, 2.01)
    rs = find_roots(f, box)
    assert sum(r.multiplicity for r in rs) == winding_count(f, rectangle_path(*box, 256)) == n
    for r in rs:
        assert abs(f(r.location)) <= 1e-8 * max(1, np.abs(f.coefficients).max())

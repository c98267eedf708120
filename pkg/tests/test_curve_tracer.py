import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from skimage import measure

from levelconf import geometry as geo
from levelconf.expr import AnalyticFunction
from levelconf.roots import winding_count
from levelconf.tracer import (HitCritical, LEVEL_TOL, build_level_graph, point_on_level,
                              trace_gradient, trace_level_curve, unwrapped_args)

S34 = math.sqrt(3.4)


def F(text):
    return AnalyticFunction.parse(text)


def marching_squares(f, eps, box, n=2000):
    """Independent oracle: contours of |f| - eps on an n x n grid."""
    x0, x1, y0, y1 = box
    xs, ys = np.linspace(x0, x1, n), np.linspace(y0, y1, n)
    Z = xs[None, :] + 1j * ys[:, None]
    out = []
    for c in measure.find_contours(np.abs(f(Z)) - eps, 0.0):
        r, k = c[:, 0], c[:, 1]
        out.append(np.interp(k, np.arange(n), xs) + 1j * np.interp(r, np.arange(n), ys))
    return out


def dist_to(points, curve):
    return np.abs(points[:, None] - curve[None, :]).min(axis=1)


def test_unit_circle():
    arc = trace_level_curve(F("z^2"), 1.0, 1.0)
    assert arc.closed
    assert np.abs(np.abs(arc.points) - 1).max() <= 1e-6


def test_lemniscate_against_marching_squares():
    f = F("z^2-1")
    g = build_level_graph(f, 1.0, (-2, 2, -2, 2))
    oracle = np.concatenate(marching_squares(f, 1.0, (-2, 2, -2, 2)))
    pts = np.concatenate([a.points for a in g.arcs])
    assert dist_to(pts[::5], oracle).max() < 5e-3
    assert dist_to(oracle[::20], pts).max() < 5e-3
    assert any(abs(v.point) < 1e-6 for v in g.vertices)


def test_small_level_oval_does_not_encircle_minus_one():
    f = F("z^2-1")
    seed = math.sqrt(1.5)  # |f| = 1/2 on the real axis
    arc = trace_level_curve(f, seed, 0.5)
    assert arc.closed
    poly = geo.close(arc.points)
    assert geo.contains(poly, [1.0])[0] and not geo.contains(poly, [-1.0])[0]
    oracle = [c for c in marching_squares(f, 0.5, (0, 2, -1, 1)) if len(c) > 50]
    assert dist_to(arc.points[::5], np.concatenate(oracle)).max() < 5e-3


def test_level_arc_stays_on_level():
    f = F("z^3 - 2*z + 1")
    g = build_level_graph(f, 3.0, (-3, 3, -3, 3))
    for a in g.arcs:
        assert np.abs(np.abs(f(a.points)) - 3.0).max() <= 10 * LEVEL_TOL * 3.0
        assert np.abs(np.diff(a.points)).max() <= 0.0101


@pytest.mark.parametrize("text,eps,vertex,arg", [
    ("z^2-1", 1.0, 0.0, math.pi),
    ("z^2 - sqrt(3.4)*z", 0.85, S34 / 2, math.pi),
])
def test_figure_eight_graphs(text, eps, vertex, arg):
    g = build_level_graph(F(text), eps, (-3, 3, -3, 3))
    assert len(g.vertices) == 1
    v = g.vertices[0]
    assert v.point == pytest.approx(vertex, abs=1e-8)
    assert v.arg == pytest.approx(arg, abs=1e-6)
    assert g.degree(0) == 4
    assert len(g.bounded_faces) == 2
    assert g.euler_characteristic() == 2


def test_cube_single_loop():
    g = build_level_graph(F("z^3"), 1.0, (-2, 2, -2, 2))
    assert not g.vertices and len(g.arcs) == 1 and g.arcs[0].closed
    assert len(g.bounded_faces) == 1


def test_gradient_radial():
    p = trace_gradient(F("z^2"), 0.5, "ascent", 1.0)
    assert np.abs(p.points.imag).max() < 1e-9
    assert p.points[-1] == pytest.approx(1.0, abs=1e-8)


def test_gradient_reaches_sqrt2():
    p = trace_gradient(F("z^2-1"), 2.0, "descent", 1.0)
    assert np.abs(p.points.imag).max() < 1e-9
    assert p.points[-1] == pytest.approx(math.sqrt(2), abs=1e-8)


def test_gradient_arg_drift_sine():
    # the descent from pi/2 (1 + 0.1i) follows Re z = pi/2 into the saddle at pi/2,
    # which sits above the requested stop level: the partial path is returned
    f = F("sin(z)")
    z0 = math.pi / 2 * (1 + 0.1j)
    with pytest.raises(HitCritical) as e:
        trace_gradient(f, z0, "descent", 0.5 * abs(f(z0)))
    assert abs(e.value.location - math.pi / 2) < 1e-3
    args = unwrapped_args(f, e.value.path)
    assert np.abs(args - args[0]).max() <= 1e-6
    assert np.all(np.diff(np.abs(f(e.value.path))) < 0)


def test_gradient_arg_drift_off_saddle():
    f = F("sin(z)")
    z0 = 1.0 + 0.3j
    p = trace_gradient(f, z0, "descent", 0.5 * abs(f(z0)))
    args = unwrapped_args(f, p.points)
    assert np.abs(args - args[0]).max() <= 1e-6
    assert abs(f(p.points[-1])) == pytest.approx(0.5 * abs(f(z0)), rel=1e-8)


def test_gradient_hits_critical_point():
    with pytest.raises(HitCritical) as e:
        trace_gradient(F("z^2-1"), 0.5, "ascent", 3.0)
    assert abs(e.value.location) < 1e-3


def polyline_distance(points, curve):
    a, b = curve[:-1], curve[1:]
    d = b - a
    t = np.clip(((points[:, None] - a[None, :]) * d.conj()[None, :]).real / np.abs(d) ** 2, 0, 1)
    return np.abs(points[:, None] - (a[None, :] + t * d[None, :])).min(axis=1)


def test_retrace_half_step():
    f = F("z^3 - 2*z + 1")
    seed = complex(point_on_level(f, 0j, 1.0, 5.0))
    a = trace_level_curve(f, seed, 5.0)
    b = trace_level_curve(f, a.points[0], 5.0, step_max=0.005)
    # the finer samples lie on the coarse polyline up to its chord error
    assert polyline_distance(b.points, a.points).max() <= 2e-5
    assert polyline_distance(a.points, b.points).max() <= 1e-5
    for arc in (a, b):
        assert np.abs(np.abs(f(arc.points)) - 5.0).max() <= 10 * LEVEL_TOL * 5.0


@given(st.integers(0, 10_000))
def test_graph_invariants_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    roots = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
    c = np.poly(roots)
    f = AnalyticFunction.from_coefficients(c[::-1])
    crit = np.roots(np.polyder(c))
    eps = float(max(abs(np.polyval(c, crit))))  # level through the highest saddle
    g = build_level_graph(f, eps, (-4, 4, -4, 4))
    assert g.euler_characteristic() == 2 * len(g.components()) or len(g.components()) == 1
    for v in range(len(g.vertices)):
        assert g.degree(v) % 2 == 0 and g.degree(v) >= 4
    comps = g.components()
    if len(comps) == 1:
        assert g.euler_characteristic() == 2
        total = 0
        for fc in g.bounded_faces:
            k = winding_count(f, fc.polygon)
            assert k >= 1
            total += k
        assert total == n

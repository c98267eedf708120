"""Critical level-curve configuration of ``f`` on a sublevel region."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import config as cf
from . import geometry as geo
from .expr import AnalyticFunction, as_function
from .roots import BoundaryTooClose, find_roots
from .tracer import (HitCritical, LevelGraph, build_critical_graph, closed_level_loop,
                     point_on_level, trace_gradient, unwrapped_args)

LEVEL_TOL = 1e-8
COLLISION_TOL = 1e-5
MARK_TOL = 1e-9


class ExtractionError(RuntimeError):
    pass


class LevelCollision(ExtractionError):
    pass


@dataclass
class GfbPair:
    """``f`` with a boundary level; the region is the component of
    ``{|f| < level}`` containing ``seed`` (default: centroid of the zeros)."""

    f: AnalyticFunction
    level: float
    seed: complex | None = None
    box: tuple | None = None

    def __post_init__(self):
        self.f = as_function(self.f)
        self.level = float(self.level)
        if not self.level > 0:
            raise ValueError("boundary level must be positive")


def polynomial_box(f: AnalyticFunction, level: float) -> tuple:
    """Square containing ``{|p| <= level}``."""
    c = np.asarray(f.coefficients, dtype=complex)
    n = len(c) - 1
    lead = abs(c[-1])
    R = 1.0
    while True:
        lower = lead * R**n - sum(abs(c[k]) * R**k for k in range(n))
        if lower > 2 * level:
            break
        R *= 1.5
    R *= 1.1
    return (-R, R, -R, R)


def _roots_in_box(f, box, kind):
    x0, x1, y0, y1 = box
    for k in range(6):
        e = 1e-3 * (1 + 0.37 * k) * max(x1 - x0, y1 - y0)
        try:
            return find_roots(f, (x0 - e, x1 + e * 1.13, y0 - e * 0.91, y1 + e * 1.07), kind)
        except BoundaryTooClose:
            continue
    raise ExtractionError("could not place a search box away from roots")


def _unwrapped(f, arc):
    return arc.args if arc.args is not None else unwrapped_args(f, arc.points)


def _mark_params(args: np.ndarray, closed: bool):
    """Multiples of 2pi crossed along an unwrapped arg profile."""
    lo, hi = float(args[0]), float(args[-1])
    if closed:
        k0 = math.ceil(lo / cf.TWO_PI - MARK_TOL)
        return [k * cf.TWO_PI for k in range(k0, k0 + int(round((hi - lo) / cf.TWO_PI)))]
    k0 = math.floor(lo / cf.TWO_PI + 1e-7) + 1
    out = []
    k = k0
    while k * cf.TWO_PI < hi - 1e-7:
        out.append(k * cf.TWO_PI)
        k += 1
    return out


def _locate(f, pts, args, target, level):
    j = int(np.searchsorted(args, target))
    j = min(max(j, 1), len(pts) - 1)
    a0, a1 = args[j - 1], args[j]
    t = 0.0 if a1 == a0 else (target - a0) / (a1 - a0)
    z = pts[j - 1] + t * (pts[j] - pts[j - 1])
    df = f.derivative()
    for _ in range(30):
        d = df(z)
        if d == 0:
            break
        step = (f(z) - level) / d
        z -= step
        if abs(step) < 1e-15 * max(1, abs(z)):
            break
    return complex(z)


def distinguished_points(f, graph: LevelGraph) -> dict:
    """Points of the graph where ``f`` is positive real.

    Returns ``{mark: location}`` keyed like configuration marks; also fills
    ``arc_marks`` counts on the graph as attribute ``mark_counts``.
    """
    f = as_function(f)
    out = {}
    counts = []
    for ai, arc in enumerate(graph.arcs):
        args = _unwrapped(f, arc)
        if not arc.closed:
            args = args - args[0] + graph.vertices[arc.tail].arg
        targets = _mark_params(args, arc.closed)
        counts.append(len(targets))
        for k, t in enumerate(targets):
            out[("arc", ai, k)] = _locate(f, arc.points, args, t, graph.level)
    for vi, v in enumerate(graph.vertices):
        if cf._is_mark_arg(v.arg):
            out[("vertex", vi)] = v.point
    graph.mark_counts = counts
    return out


def _snap_arg(x):
    x = x % cf.TWO_PI
    return 0.0 if cf._is_mark_arg(x) else x


def graph_to_member(f, graph: LevelGraph):
    marks = distinguished_points(f, graph)
    if not graph.vertices:
        m = cf.loop_member(graph.level, graph.mark_counts[0])
    else:
        m = cf.graph_member(graph.level, [_snap_arg(v.arg) for v in graph.vertices],
                            [(a.tail, a.head) for a in graph.arcs], graph.rotation,
                            graph.mark_counts)
    return m, marks


def _face_polygon(graph: LevelGraph, face: cf.FaceData):
    if graph.arcs[0].closed:
        return geo.close(graph.arcs[0].points)
    return graph.face_polygon(list(face.darts))


class _Extractor:
    def __init__(self, f, zeros, crits):
        self.f = f
        self.zeros = zeros
        self.crits = [c for c in crits if abs(f(c.location)) > 0]

    def inside(self, records, poly):
        if not records:
            return []
        mask = geo.contains(poly, [r.location for r in records])
        return [r for r, k in zip(records, mask) if k]

    def face(self, poly, upper: float) -> cf.Configuration:
        zs = self.inside(self.zeros, poly)
        if not zs:
            raise ExtractionError("bounded face without zeros")
        if len(zs) == 1:
            return cf.Configuration(cf.SinglePoint(zs[0].multiplicity),
                                    meta={"point": zs[0].location})
        cs = self.inside(self.crits, poly)
        vals = [abs(self.f(c.location)) for c in cs]
        vals = [v for v in vals if v < upper * (1 - LEVEL_TOL)]
        if not vals:
            raise ExtractionError("face with several zeros but no critical level")
        H = max(vals)
        on = [c for c in cs if abs(abs(self.f(c.location)) - H) <= LEVEL_TOL * H]
        g = build_critical_graph(self.f, [c.location for c in on], H,
                                 [c.multiplicity for c in on])
        if len(g.components()) != 1:
            raise ExtractionError(f"critical level {H} is disconnected inside one face")
        return self.member(g)

    def member(self, g: LevelGraph) -> cf.Configuration:
        m, marks = graph_to_member(self.f, g)
        children = []
        for fd in m.faces:
            children.append(self.face(_face_polygon(g, fd), g.level))
        offsets = [self.offset(m, fd, marks, child) for fd, child in zip(m.faces, children)]
        return cf.Configuration(m, tuple(children), tuple(offsets),
                                meta={"graph": g, "marks": marks})

    def offset(self, m, fd, marks, child) -> int:
        if isinstance(child.member, cf.SinglePoint):
            return 0
        cm = child.member
        _, outer = cf.outer_visits(cm, 0)
        cmarks = child.meta["marks"]
        locs = np.array([cmarks[x] for x in outer])
        offs = set(range(fd.z))
        for i, x in enumerate(fd.marks):
            try:
                path = trace_gradient(self.f, marks[x], "descent", cm.H)
                end = path.points[-1]
            except HitCritical as exc:
                end = exc.location
            d = np.abs(locs - end)
            # a vertex mark is visited more than once on the outer walk
            near = np.nonzero(d <= d.min() + 1e-7 * max(1.0, abs(end)))[0]
            offs &= {(int(j) - i) % fd.z for j in near}
        if len(offs) < 1:
            raise ExtractionError("gradient map is not order preserving")
        return min(offs)


def extract_config(pair: GfbPair) -> cf.Configuration:
    f, eps = pair.f, pair.level
    if pair.box is not None:
        box = pair.box
    elif f.is_polynomial:
        box = polynomial_box(f, eps)
    else:
        raise ExtractionError("a search box is required for non-polynomial functions")
    zeros = _roots_in_box(f, box, "zero")
    crits = _roots_in_box(f, box, "critical")
    if not zeros:
        raise ExtractionError("no zeros in the search box")
    seed = pair.seed
    if seed is None:
        w = np.array([r.multiplicity for r in zeros], dtype=float)
        seed = complex(np.dot(w, [r.location for r in zeros]) / w.sum())
    for c in crits:
        v = abs(f(c.location))
        if v > 0 and LEVEL_TOL * eps < abs(v - eps) <= COLLISION_TOL * eps:
            raise LevelCollision(f"critical value modulus {v!r} is too close to level {eps!r}")
    ex = _Extractor(f, zeros, crits)
    on = [c for c in ex.crits if abs(abs(f(c.location)) - eps) <= LEVEL_TOL * eps]
    if on:
        g = build_critical_graph(f, [c.location for c in on], eps, [c.multiplicity for c in on])
        if len(g.components()) != 1:
            raise ExtractionError("boundary level set is disconnected")
        conf = ex.member(g)
        return replace(conf, boundary_level=eps)
    if abs(f(seed)) >= eps:
        raise ExtractionError(f"seed {seed} is not inside the sublevel region")
    start = point_on_level(f, seed, 1.0, eps)
    g = closed_level_loop(f, start, eps)
    poly = geo.close(g.arcs[0].points)
    if geo.signed_area(poly) < 0:
        raise ExtractionError("level loop through the seed does not enclose it")
    m, marks = graph_to_member(f, g)
    child = ex.face(poly, eps)
    off = ex.offset(m, m.faces[0], marks, child)
    return cf.Configuration(m, (child,), (off,), boundary_level=eps,
                            meta={"graph": g, "marks": marks})


def extract(f, level: float, seed=None, box=None) -> cf.Configuration:
    return extract_config(GfbPair(as_function(f), level, seed, box))


def all_marks(config: cf.Configuration):
    """Locations of every distinguished point in the tree."""
    out = []
    for node in config.walk():
        out.extend(node.meta.get("marks", {}).values())
    return out

"""Level curves and gradient lines of ``|f|``, assembled into planar graphs.

Along a level curve the natural direction is ``i f conj(f')``: the sublevel
side lies on the left and ``arg f`` increases.  Gradient lines follow
``+/- f conj(f')``, along which ``arg f`` is constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .expr import as_function
from .roots import find_roots

LEVEL_TOL = 1e-8
ARG_TOL = 1e-6
CRIT_TOL = 1e-6
STEP_MAX = 0.01
SADDLE_RADIUS = 1e-3
TWO_PI = 2 * math.pi


class TraceError(RuntimeError):
    pass


class OffLevel(TraceError):
    pass


class StepCollapse(TraceError):
    pass


class HitCritical(TraceError):
    def __init__(self, message, path=None, location=None):
        super().__init__(message)
        self.path = path
        self.location = location


# --------------------------------------------------------------------------
# data


@dataclass
class LevelArc:
    points: np.ndarray
    level: float
    tail: int | None = None
    head: int | None = None
    closed: bool = False
    args: np.ndarray | None = None  # unwrapped arg f along points
    end_reason: str = ""
    end_data: object = None

    @property
    def endpoints(self):
        return "closed" if self.closed else (self.tail, self.head)


@dataclass
class Vertex:
    point: complex
    arg: float
    multiplicity: int = 1
    implied: bool = False


@dataclass
class Face:
    darts: list[tuple[int, int]]
    bounded: bool
    polygon: np.ndarray
    interior: complex | None = None


@dataclass
class GradientPath:
    points: np.ndarray
    direction: str
    start_level: float
    end_level: float
    arg: float
    complete: bool = True


@dataclass
class LevelGraph:
    """A planar embedded level set: vertices, arcs, rotation system, faces.

    ``rotation[v]`` lists arc-ends ``(arc, side)`` counterclockwise, where
    side 0 is the arc's tail and side 1 its head.
    """

    level: float
    vertices: list[Vertex] = field(default_factory=list)
    arcs: list[LevelArc] = field(default_factory=list)
    rotation: list[list[tuple[int, int]]] = field(default_factory=list)
    faces: list[Face] = field(default_factory=list)

    def degree(self, v: int) -> int:
        return len(self.rotation[v])

    @property
    def bounded_faces(self) -> list[Face]:
        return [f for f in self.faces if f.bounded]

    def euler_characteristic(self) -> int:
        loops = sum(1 for a in self.arcs if a.closed)
        return (len(self.vertices) + loops) - len(self.arcs) + len(self.faces)

    def dart_points(self, dart):
        arc, d = dart
        pts = self.arcs[arc].points
        return pts if d > 0 else pts[::-1]

    def face_polygon(self, darts) -> np.ndarray:
        parts = [self.dart_points(d)[:-1] for d in darts]
        poly = np.concatenate(parts) if parts else np.zeros(0, complex)
        return geo.close(poly)

    def next_dart(self, dart):
        arc, d = dart
        a = self.arcs[arc]
        v = a.head if d > 0 else a.tail
        end = (arc, 1 if d > 0 else 0)
        rot = self.rotation[v]
        k = rot.index(end)
        narc, nside = rot[(k - 1) % len(rot)]
        return (narc, 1 if nside == 0 else -1)

    def compute_faces(self) -> list[Face]:
        """Face walk on darts; each face keeps its left side."""
        faces = []
        seen = set()
        for i, a in enumerate(self.arcs):
            if a.closed:
                poly = geo.close(a.points)
                faces.append(Face([(i, 1)], True, poly))
                faces.append(Face([(i, -1)], False, poly[::-1]))
                seen.update({(i, 1), (i, -1)})
        for i, a in enumerate(self.arcs):
            if a.closed:
                continue
            for d in (1, -1):
                if (i, d) in seen:
                    continue
                orbit = []
                cur = (i, d)
                while cur not in seen:
                    seen.add(cur)
                    orbit.append(cur)
                    cur = self.next_dart(cur)
                poly = self.face_polygon(orbit)
                bounded = all(dd > 0 for _, dd in orbit)
                faces.append(Face(orbit, bounded, poly))
        for fc in faces:
            if fc.bounded:
                fc.interior = geo.interior_point(fc.polygon)
        self.faces = faces
        return faces

    def components(self) -> list[set[int]]:
        """Connected components as sets of arc ids."""
        parent = list(range(len(self.arcs)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for rot in self.rotation:
            for (a, _), (b, _) in zip(rot, rot[1:]):
                parent[find(a)] = find(b)
        comps: dict[int, set[int]] = {}
        for i in range(len(self.arcs)):
            comps.setdefault(find(i), set()).add(i)
        return list(comps.values())


# --------------------------------------------------------------------------
# local fields


def _unit(c: complex) -> complex:
    a = abs(c)
    return c / a if a > 0 else 0j


def level_tangent(f, df, z) -> complex:
    return _unit(1j * f(z) * np.conj(df(z)))


def correct_to_level(f, df, z, eps, *, tol=1e-13, max_iter=30) -> complex:
    for _ in range(max_iter):
        v, d = f(z), df(z)
        err = abs(v) - eps
        if abs(err) <= tol * eps:
            return z
        ad = abs(d)
        if ad == 0:
            raise HitCritical("critical point during level correction", location=z)
        z = z - err / ad * _unit(v * np.conj(d))
    return z


def _snap_arg(f, df, z, arg0, level=None):
    """Newton on log f(z) = log|f| + i arg0 (or log(level) + i arg0)."""
    for _ in range(20):
        v, d = f(z), df(z)
        if v == 0 or d == 0:
            return z
        target_re = math.log(abs(v)) if level is None else math.log(level)
        lv = complex(math.log(abs(v)), math.atan2(v.imag, v.real))
        diff = lv - complex(target_re, arg0)
        diff = complex(diff.real, (diff.imag + math.pi) % TWO_PI - math.pi)
        step = diff / (d / v)
        z = z - step
        if abs(step) < 1e-15 * max(1, abs(z)):
            break
    return z


# --------------------------------------------------------------------------
# tracing


def trace_level_curve(f, seed, eps, *, stop_points=(), stop_radius=1.5 * SADDLE_RADIUS,
                      ignore_first=None, boundary_hit=None, step_max=STEP_MAX,
                      max_steps=200000, level_tol=LEVEL_TOL, crit_tol=CRIT_TOL,
                      reverse=False) -> LevelArc:
    """Follow ``{|f| = eps}`` from ``seed`` in the natural direction.

    Stops on loop closure, on entering ``stop_radius`` of a stop point, or
    when ``boundary_hit(z0, z1)`` returns a crossing point.
    """
    f = as_function(f)
    df = f.derivative()
    z = complex(seed)
    if abs(abs(f(z)) - eps) > level_tol * eps:
        raise OffLevel(f"seed is off level: |f|={abs(f(z))!r}, level={eps!r}")
    if abs(df(z)) < crit_tol:
        raise HitCritical("seed is a critical point", location=z)
    z = correct_to_level(f, df, z, eps)
    sign = -1.0 if reverse else 1.0
    stops = np.asarray(list(stop_points), dtype=complex)
    pts = [z]
    travelled = 0.0
    t0 = sign * level_tangent(f, df, z)
    h = step_max
    for _ in range(max_steps):
        v, d = f(z), df(z)
        if abs(d) < crit_tol:
            raise HitCritical("level curve ran into a critical point", np.array(pts), z)
        h = min(step_max, 0.1 * abs(v) / abs(d), 2 * h)
        if len(stops):
            dist = np.abs(stops - z)
            if ignore_first is not None and travelled < 3 * stop_radius:
                dist[ignore_first] = np.inf
            dmin = float(dist.min())
            if dmin < stop_radius:
                k = int(np.argmin(dist))
                pts.append(complex(stops[k]))
                arc = LevelArc(np.array(pts), eps, end_reason="vertex", end_data=k)
                return arc
            h = min(h, max(0.5 * (dmin - 0.5 * stop_radius), 0.2 * stop_radius))
        while True:
            t1 = sign * level_tangent(f, df, z)
            zp = z + h * t1
            t2 = sign * level_tangent(f, df, zp)
            if abs(np.angle(t2 / t1)) > 0.25 and h > 1e-9:
                h *= 0.5
                continue
            znew = correct_to_level(f, df, z + h * 0.5 * (t1 + t2), eps)
            if abs(znew - z) > 2 * h and h > 1e-9:
                h *= 0.5
                continue
            break
        if h <= 1e-9:
            raise StepCollapse(f"step collapsed near {z}")
        if boundary_hit is not None:
            hit = boundary_hit(z, znew)
            if hit is not None:
                pts.append(hit)
                return LevelArc(np.array(pts), eps, end_reason="boundary", end_data=hit)
        travelled += abs(znew - z)
        pts.append(znew)
        z = znew
        if travelled > 6 * h and abs(z - pts[0]) < 1.5 * h:
            t = sign * level_tangent(f, df, z)
            if abs(np.angle(t / t0)) < 0.5:
                pts[-1] = pts[0]
                gap = abs(pts[-2] - pts[0])
                if gap > step_max:
                    k = int(math.ceil(gap / step_max))
                    a = pts[-2]
                    fill = [correct_to_level(f, df, a + (pts[0] - a) * j / k, eps) for j in range(1, k)]
                    pts[-1:-1] = fill
                return LevelArc(np.array(pts), eps, closed=True, end_reason="closed")
    raise TraceError("maximum number of steps exceeded")


def trace_gradient(f, start, direction, stop_level, *, boundary_hit=None, step_max=STEP_MAX,
                   max_steps=200000, crit_tol=CRIT_TOL, arg_tol=ARG_TOL) -> GradientPath:
    """Steepest ascent/descent of ``|f|`` from ``start`` until ``|f| = stop_level``.

    ``arg f`` is held at its starting value by a Newton correction each step.
    Hitting a critical point raises :class:`HitCritical` carrying the partial
    path.
    """
    f = as_function(f)
    df = f.derivative()
    d2f = df.derivative()
    z = complex(start)
    v0 = f(z)
    if v0 == 0:
        raise ValueError("gradient line cannot start at a zero of f")
    if abs(df(z)) < crit_tol:
        raise HitCritical("start is a critical point", location=z)
    arg0 = math.atan2(v0.imag, v0.real)
    s = 1.0 if direction == "ascent" else -1.0
    if direction not in ("ascent", "descent"):
        raise ValueError("direction must be 'ascent' or 'descent'")
    target = float(stop_level)
    start_level = abs(v0)
    if s * (target - start_level) < 0:
        raise ValueError("stop level lies on the wrong side of the start level")
    pts = [z]
    for _ in range(max_steps):
        v, d = f(z), df(z)
        if abs(d) < crit_tol:
            raise HitCritical("gradient line ran into a critical point", np.array(pts), z)
        # distance to the stop level in the local log chart
        remaining = abs(math.log(target) - math.log(abs(v))) * abs(v) / abs(d)
        # |f'|/|f''| estimates the distance to the nearest critical point
        h = min(step_max, 0.1 * abs(v) / abs(d), 0.5 * abs(d) / max(abs(d2f(z)), 1e-300))
        if remaining <= h:
            z = _snap_arg(f, df, z, arg0, level=target)
            pts.append(z)
            break
        g1 = s * _unit(v * np.conj(d))
        zm = z + 0.5 * h * g1
        g2 = s * _unit(f(zm) * np.conj(df(zm)))
        znew = _snap_arg(f, df, z + h * g2, arg0)
        if boundary_hit is not None:
            hit = boundary_hit(z, znew)
            if hit is not None:
                pts.append(hit)
                return GradientPath(np.array(pts), direction, start_level, abs(f(hit)),
                                    arg0, complete=False)
        pts.append(znew)
        z = znew
    else:
        raise TraceError("maximum number of steps exceeded")
    pts = np.array(pts)
    drift = np.abs(np.angle(f(pts) / v0))
    if drift.max() > arg_tol:
        raise TraceError(f"arg drift {drift.max():.3g} exceeds tolerance")
    return GradientPath(pts, direction, start_level, abs(f(pts[-1])), arg0)


# --------------------------------------------------------------------------
# graphs


def unwrapped_args(f, points, start_arg=None) -> np.ndarray:
    vals = f(np.asarray(points, dtype=complex))
    a = np.unwrap(np.angle(vals))
    if start_arg is not None:
        a = a - a[0] + start_arg
    return a


def saddle_directions(f, v: complex, level: float, expected: int | None = None,
                      radius: float = SADDLE_RADIUS) -> list[float]:
    """Angles at which ``{|f| = level}`` leaves a critical point ``v``."""
    f = as_function(f)
    n = 720
    th = np.linspace(0, TWO_PI, n, endpoint=False)
    s = np.abs(f(v + radius * np.exp(1j * th))) - level
    out = []
    for k in range(n):
        a, b = s[k], s[(k + 1) % n]
        if a == 0:
            out.append(th[k])
        elif a * b < 0:
            lo, hi = th[k], th[k] + TWO_PI / n
            flo = a
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                fm = abs(f(v + radius * np.exp(1j * mid))) - level
                if fm * flo <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            out.append((0.5 * (lo + hi)) % TWO_PI)
    if expected is not None and len(out) != expected:
        raise TraceError(f"found {len(out)} level directions at {v}, expected {expected}")
    return out


def build_critical_graph(f, vertex_points, level, multiplicities=None, *,
                         radius: float = SADDLE_RADIUS, boundary_hit=None) -> LevelGraph:
    """Trace the level set through the given critical points into a graph."""
    f = as_function(f)
    df = f.derivative()
    vps = [complex(p) for p in vertex_points]
    mults = list(multiplicities) if multiplicities is not None else [1] * len(vps)
    g = LevelGraph(level=float(level))
    for p, k in zip(vps, mults):
        val = f(p)
        g.vertices.append(Vertex(p, math.atan2(val.imag, val.real) % TWO_PI, k))
    ends = []  # (vertex, angle, outgoing, start point)
    # |f| - level grows like r^(k+1) near a k-fold critical point
    radii = [max(radius, 10.0 ** (-6.0 / (k + 1))) for k in mults]
    for vi, (p, k) in enumerate(zip(vps, mults)):
        for th in saddle_directions(f, p, level, 2 * (k + 1), radii[vi]):
            q = correct_to_level(f, df, p + radii[vi] * np.exp(1j * th), level)
            t = level_tangent(f, df, q)
            outgoing = (t * np.exp(-1j * th)).real > 0
            ends.append((vi, math.atan2((q - p).imag, (q - p).real) % TWO_PI, outgoing, q))
    incoming = {(e[0], i): e for i, e in enumerate(ends) if not e[2]}
    used_in = set()
    arc_end_angles = []
    for i, (vi, ang, out, q) in enumerate(ends):
        if not out:
            continue
        arc = trace_level_curve(f, q, level, stop_points=vps, stop_radius=1.5 * max(radii),
                                ignore_first=vi, boundary_hit=boundary_hit)
        if arc.end_reason != "vertex":
            raise TraceError(f"critical level arc from {vps[vi]} ended by {arc.end_reason}")
        wj = arc.end_data
        last = arc.points[-2]
        a_in = math.atan2((last - vps[wj]).imag, (last - vps[wj]).real) % TWO_PI
        cands = [(abs(((e[1] - a_in + math.pi) % TWO_PI) - math.pi), key)
                 for key, e in incoming.items() if key[0] == wj and key not in used_in]
        if not cands:
            raise TraceError(f"no free incoming direction at vertex {wj}")
        _, key = min(cands)
        used_in.add(key)
        pts = np.concatenate([[vps[vi]], arc.points])
        la = LevelArc(pts, float(level), tail=vi, head=wj)
        la.args = unwrapped_args(f, pts, g.vertices[vi].arg)
        g.arcs.append(la)
        arc_end_angles.append((ang, incoming[key][1]))
    if len(used_in) != len(incoming):
        raise TraceError("unmatched incoming level directions")
    g.rotation = [[] for _ in vps]
    for ai, (a_out, a_in) in enumerate(arc_end_angles):
        arc = g.arcs[ai]
        g.rotation[arc.tail].append((a_out, ai, 0))
        g.rotation[arc.head].append((a_in, ai, 1))
    g.rotation = [[(ai, side) for _, ai, side in sorted(r)] for r in g.rotation]
    g.compute_faces()
    return g


def closed_level_loop(f, seed, level, **kw) -> LevelGraph:
    """Graph made of the single closed level curve through ``seed``."""
    f = as_function(f)
    arc = trace_level_curve(f, seed, level, **kw)
    if not arc.closed:
        raise TraceError(f"level curve through {seed} did not close ({arc.end_reason})")
    arc.args = unwrapped_args(f, arc.points)
    g = LevelGraph(level=float(level), arcs=[arc])
    g.compute_faces()
    return g


def point_on_level(f, start: complex, direction: complex, level: float, *, rmax=1e3) -> complex:
    """First point along a ray from ``start`` where ``|f|`` reaches ``level``."""
    f = as_function(f)
    direction = _unit(direction)
    lo = 0.0
    hi = 1e-3
    if abs(f(start)) >= level:
        raise ValueError("start must lie below the level")
    while abs(f(start + hi * direction)) < level:
        lo = hi
        hi *= 1.5
        if hi > rmax:
            raise TraceError("ray never reaches the level")
    # coarse scan keeps the first crossing
    ts = np.linspace(lo, hi, 64)
    vals = np.abs(f(start + ts * direction)) - level
    k = int(np.argmax(vals >= 0))
    lo, hi = (ts[k - 1] if k > 0 else lo), ts[k]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if abs(f(start + mid * direction)) < level:
            lo = mid
        else:
            hi = mid
    z = start + 0.5 * (lo + hi) * direction
    return correct_to_level(f, f.derivative(), z, level)


def build_level_graph(f, eps, region, *, grid: int = 200, crit_rel_tol: float = 1e-7,
                      level_tol: float = LEVEL_TOL) -> LevelGraph:
    """All components of ``{|f| = eps}`` inside a rectangle.

    Critical points on the level become vertices; remaining components are
    found by a sign-change scan of ``|f| - eps`` and traced as closed loops.
    Components crossing the rectangle edge are not supported.
    """
    f = as_function(f)
    x0, x1, y0, y1 = region
    zeros = find_roots(f, region, "zero")
    for r in zeros:
        if abs(abs(f(r.location)) - eps) <= level_tol:
            raise TraceError("a zero of f lies on the level")
    crits = find_roots(f, region, "critical")
    on_level = [c for c in crits if abs(abs(f(c.location)) - eps) <= crit_rel_tol * eps
                and abs(f(c.location)) > 0]
    if on_level:
        g = build_critical_graph(f, [c.location for c in on_level], eps,
                                 [c.multiplicity for c in on_level])
    else:
        g = LevelGraph(level=float(eps))
    xs = np.linspace(x0, x1, grid)
    ys = np.linspace(y0, y1, grid)
    Z = xs[None, :] + 1j * ys[:, None]
    S = np.abs(f(Z)) - eps
    covered = np.zeros_like(S, dtype=bool)
    dx = (x1 - x0) / (grid - 1)
    dy = (y1 - y0) / (grid - 1)

    def mark(points):
        ii = np.clip(np.rint((points.imag - y0) / dy).astype(int), 0, grid - 1)
        jj = np.clip(np.rint((points.real - x0) / dx).astype(int), 0, grid - 1)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                covered[np.clip(ii + di, 0, grid - 1), np.clip(jj + dj, 0, grid - 1)] = True

    for arc in g.arcs:
        mark(geo.resample(arc.points, 0.25 * min(dx, dy)))
    change = (S[:, :-1] * S[:, 1:] < 0)
    for i, j in zip(*np.nonzero(change)):
        if covered[i, j] or covered[i, j + 1]:
            continue
        a, b = Z[i, j], Z[i, j + 1]
        lo, hi = 0.0, 1.0
        sa = S[i, j]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            sm = abs(f(a + mid * (b - a))) - eps
            if sm * sa > 0:
                lo = mid
            else:
                hi = mid
        seed = correct_to_level(f, f.derivative(), a + 0.5 * (lo + hi) * (b - a), eps)
        arc = trace_level_curve(f, seed, eps)
        if not arc.closed:
            raise TraceError("level component is not closed inside the region")
        arc.args = unwrapped_args(f, arc.points)
        g.arcs.append(arc)
        mark(geo.resample(arc.points, 0.25 * min(dx, dy)))
    g.compute_faces()
    return g

"""Refitted domain boundaries made of level and gradient segments.

The enclosing curve is built in logarithmic coordinates ``w = log h``: the
offset curve is tracked through a square lattice of mesh ``2 pi / M`` and
the path through the visited cell centres is pulled back to the z-plane by
continuation of the local inverse of ``h``.  Horizontal lattice moves are
level segments (``|h|`` constant), vertical moves are gradient segments
(``arg h`` constant).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import shapely
from shapely.geometry import LineString, Point, Polygon

from . import geometry as geo
from .domain import Domain
from .expr import as_function
from .roots import RootError, find_roots
from .tracer import TraceError, closed_level_loop, point_on_level

DIVISIONS = (32, 64, 128, 256, 512)
SUBSTEPS = 8
ROLE_TOL = 1e-12


class RefitError(RuntimeError):
    pass


class NeighborError(ValueError):
    pass


@dataclass
class Segment:
    tag: str  # "level" | "gradient"
    value: float  # |h| on a level segment, arg h (unwrapped) on a gradient segment
    start: int  # index range into the dense boundary arrays
    stop: int
    role: str = ""

    def to_dict(self, bd) -> dict:
        pts = bd.z[self.start:self.stop + 1]
        return {"tag": self.tag, "role": self.role, "value": self.value,
                "polyline": [[p.real, p.imag] for p in pts]}


@dataclass
class RefittedBoundary:
    """Closed counterclockwise boundary; ``w[-1] = w[0] + 2 pi i N``."""

    h: object
    z: np.ndarray  # dense points, z[-1] == z[0]
    w: np.ndarray  # log h along z, unwrapped
    segments: list
    corners: list = field(default_factory=list)  # (dense index, "inside"|"outside")
    lattice: tuple = (0.0, 0.0, 0.0)  # rho0, theta0, delta
    single_level: float | None = None

    @property
    def winding(self) -> int:
        return int(round((self.w[-1].imag - self.w[0].imag) / (2 * math.pi)))

    @property
    def polygon(self) -> np.ndarray:
        return self.z

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        poly = Polygon(np.column_stack([self.z.real, self.z.imag]))
        return shapely.contains_xy(poly, pts.real, pts.imag)

    @property
    def levels(self) -> list:
        return sorted({s.value for s in self.segments if s.tag == "level"})

    @property
    def max_level(self) -> float:
        return float(np.exp(self.w.real.max()))

    def segment_at(self, k: int) -> Segment:
        for s in self.segments:
            if s.start <= k <= s.stop:
                return s
        raise IndexError(k)

    def reversed(self) -> "RefittedBoundary":
        n = len(self.z) - 1
        segs = [Segment(s.tag, s.value, n - s.stop, n - s.start) for s in reversed(self.segments)]
        corners = [(n - k, kind) for k, kind in reversed(self.corners)]
        return replace(self, z=self.z[::-1].copy(), w=self.w[::-1].copy(), segments=segs,
                       corners=corners)

    def to_dict(self) -> dict:
        return {
            "single_level": self.single_level,
            "lattice": {"rho0": self.lattice[0], "theta0": self.lattice[1],
                        "delta": self.lattice[2]},
            "segments": [s.to_dict(self) for s in self.segments],
            "corners": [{"point": [self.z[k].real, self.z[k].imag], "kind": kind}
                        for k, kind in self.corners],
        }


# --------------------------------------------------------------------------
# construction


def _offset_curve(D: Domain, dist: float) -> np.ndarray:
    poly = Polygon(np.column_stack([D.points.real, D.points.imag]))
    ring = poly.buffer(dist, quad_segs=64).exterior
    xy = np.asarray(ring.coords)
    pts = geo.close(xy[:, 0] + 1j * xy[:, 1])
    if geo.signed_area(pts) < 0:
        pts = pts[::-1]
    return pts


def _log_along(h, pts, max_dw: float):
    """Resample ``pts`` until consecutive log-values differ by < ``max_dw``."""
    for _ in range(12):
        vals = h(pts)
        if np.any(vals == 0):
            raise RefitError("h vanishes on the offset curve")
        w = np.log(np.abs(vals)) + 1j * np.unwrap(np.angle(vals))
        dw = np.abs(np.diff(w))
        if dw.max() < max_dw:
            return pts, w
        step = np.abs(np.diff(pts)).max() * max_dw / dw.max() * 0.8
        pts = geo.resample(pts, step)
    raise RefitError("h varies too fast along the offset curve")


def _cell_walk(w, rho0, theta0, delta):
    I = np.rint((w.real - rho0) / delta).astype(int)
    J = np.rint((w.imag - theta0) / delta).astype(int)
    cells = [(I[0], J[0])]
    for k in range(1, len(w)):
        a, b = cells[-1], (I[k], J[k])
        if a == b:
            continue
        di, dj = b[0] - a[0], b[1] - a[1]
        if abs(di) + abs(dj) > 2 or abs(di) > 1 or abs(dj) > 1:
            raise RefitError("offset curve skips lattice cells")
        if di and dj:
            # which lattice line was crossed first
            x0, x1 = w[k - 1], w[k]
            ri = rho0 + (a[0] + 0.5 * di) * delta
            tj = theta0 + (a[1] + 0.5 * dj) * delta
            ti = (ri - x0.real) / (x1.real - x0.real)
            tt = (tj - x0.imag) / (x1.imag - x0.imag)
            cells.append((b[0], a[1]) if ti < tt else (a[0], b[1]))
        cells.append(b)
    return cells


def _reduce(cells):
    out = []
    for c in cells:
        if len(out) >= 2 and out[-2] == c:
            out.pop()
            continue
        out.append(c)
    return out


def _pull_back(h, W, z_start):
    """Continue the local inverse of ``h`` along the complex path ``W``."""
    dh = h.derivative()
    z = complex(z_start)
    out = np.empty(len(W), dtype=complex)
    prev_w = None
    for k, wk in enumerate(W):
        target = np.exp(wk)
        if prev_w is not None:
            z = z + (wk - prev_w) * h(z) / dh(z)
        for _ in range(20):
            d = dh(z)
            if d == 0:
                raise RefitError("pull-back met a critical point")
            step = (h(z) - target) / d
            z -= step
            if abs(step) < 1e-14 * max(1.0, abs(z)):
                break
        if abs(h(z) - target) > 1e-9 * abs(target):
            raise RefitError("pull-back failed to converge")
        out[k] = z
        prev_w = wk
    return out


def _segments_from_moves(cells, nsub):
    """Group unit lattice moves into maximal runs along one axis."""
    moves = [(b[0] - a[0], b[1] - a[1]) for a, b in zip(cells[:-1], cells[1:])]
    runs = []
    for k, mv in enumerate(moves):
        axis = "gradient" if mv[0] else "level"
        if runs and runs[-1][0] == axis:
            runs[-1][2] = k + 1
        else:
            runs.append([axis, k, k + 1])
    return [(axis, a * nsub, b * nsub) for axis, a, b in runs]


def _staircase(h, C, wC, D, margin, rho0, theta0, M):
    delta = 2 * math.pi / M
    # start where the curve sits closest to a cell centre
    off = np.abs((wC.real - rho0) / delta - np.rint((wC.real - rho0) / delta)) + \
        np.abs((wC.imag - theta0) / delta - np.rint((wC.imag - theta0) / delta))
    k0 = int(np.argmin(off[:-1]))
    C = np.concatenate([C[k0:-1], C[:k0 + 1]])
    wC = np.concatenate([wC[k0:-1], wC[:k0 + 1] + (wC[-1] - wC[0])])
    cells = _reduce(_cell_walk(wC, rho0, theta0, delta))
    N = int(round((wC[-1].imag - wC[0].imag) / (2 * math.pi)))
    shift = (0, N * M)
    if cells[-1] != (cells[0][0], cells[0][1] + shift[1]):
        raise RefitError("cell walk does not close")
    if len(cells) > 2 and cells[1] == (cells[-2][0], cells[-2][1] - shift[1]):
        raise RefitError("cell walk backtracks across its start")
    W = []
    for a, b in zip(cells[:-1], cells[1:]):
        wa = rho0 + a[0] * delta + 1j * (theta0 + a[1] * delta)
        wb = rho0 + b[0] * delta + 1j * (theta0 + b[1] * delta)
        W.extend(wa + (wb - wa) * np.arange(SUBSTEPS) / SUBSTEPS)
    c = cells[-1]
    W.append(rho0 + c[0] * delta + 1j * (theta0 + c[1] * delta))
    W = np.asarray(W)
    Z = _pull_back(h, W, C[0])
    if abs(Z[-1] - Z[0]) > 1e-6 * max(1.0, abs(Z[0])):
        raise RefitError("pulled-back boundary does not close")
    Z[-1] = Z[0]
    # a walk that starts in the middle of a run is rotated to begin at a corner
    runs = _segments_from_moves(cells, 1)
    if len(runs) > 1 and runs[0][0] == runs[-1][0]:
        cut = runs[-1][1]
        cells = [(i, j - shift[1]) for i, j in cells[cut:-1]] + cells[:cut + 1]
        k = cut * SUBSTEPS
        W = np.concatenate([W[k:-1] - 2j * math.pi * N, W[:k + 1]])
        Z = np.concatenate([Z[k:-1], Z[:k + 1]])
    segs = []
    for axis, a, b in _segments_from_moves(cells, SUBSTEPS):
        value = float(np.exp(W[a].real)) if axis == "level" else float(W[a].imag)
        segs.append(Segment(axis, value, a, b))
    return Z, W, segs, delta


def _within_margin(Z, D: Domain, margin) -> bool:
    poly = Polygon(np.column_stack([D.points.real, D.points.imag]))
    dist = shapely.distance(poly, shapely.points(Z.real, Z.imag))
    return bool(np.max(dist) <= margin)


def _encloses(Z, D: Domain) -> bool:
    ring = Polygon(np.column_stack([Z.real, Z.imag]))
    if not ring.is_valid:
        return False
    inner = Polygon(np.column_stack([D.points.real, D.points.imag]))
    return bool(ring.contains(inner))


def _special_points(h, D: Domain, margin):
    x0, x1, y0, y1 = D.bbox
    e = 1.3 * margin
    box = (x0 - e, x1 + e * 1.01, y0 - e * 0.99, y1 + e * 1.02)
    try:
        zs = find_roots(h, box, "zero")
        cs = find_roots(h, box, "critical")
    except RootError as exc:
        raise RefitError(f"cannot locate zeros and critical points near the domain: {exc}")
    return [r.location for r in zs], [r.location for r in cs]


def _clear_of(Z, pts, tol) -> bool:
    if not pts:
        return True
    line = LineString(np.column_stack([Z.real, Z.imag]))
    return all(line.distance(Point(p.real, p.imag)) > tol for p in pts)


def _single_level(h, D: Domain, margin, zeros):
    """A level loop enclosing D within the margin, if one exists."""
    inner = _offset_curve(D, 0.05 * margin)
    level = float(np.abs(h(inner)).max())
    seed = complex(np.mean(D.points[:-1]))
    if not D.contains(seed) or abs(h(seed)) >= level:
        inside = [z for z in zeros if D.contains(z)]
        if not inside:
            return None
        seed = inside[0]
    try:
        start = point_on_level(h, seed, 1.0, level)
        g = closed_level_loop(h, start, level)
    except TraceError:
        return None
    loop = geo.close(g.arcs[0].points)
    if geo.signed_area(loop) < 0:
        return None
    if not (_encloses(loop, D) and _within_margin(loop, D, margin)):
        return None
    return level, loop


def refit_domain(h, D: Domain, margin: float, *, anchor=(0.0, 0.0), divisions=None,
                 allow_single=True) -> RefittedBoundary:
    """Enclose ``D`` by a boundary of level and gradient segments of ``h``.

    ``anchor`` = (rho0, theta0) places the lattice of ``log h``: level
    segments sit at ``|h| = exp(rho0 + k delta)`` and gradient segments at
    ``arg h = theta0 + k delta``.
    """
    h = as_function(h)
    if margin <= 0:
        raise RefitError("margin must be positive")
    zeros, crits = _special_points(h, D, margin)
    if allow_single:
        single = _single_level(h, D, margin, zeros)
        if single is not None:
            level, loop = single
            w = np.log(np.abs(h(loop))) + 1j * np.unwrap(np.angle(h(loop)))
            bd = RefittedBoundary(h, loop, w, [Segment("level", level, 0, len(loop) - 1)],
                                  [], (math.log(level), 0.0, 0.0), level)
            return classify(bd)
    C = _offset_curve(D, 0.5 * margin)
    rho0, theta0 = map(float, anchor)
    last = None
    for M in (divisions,) if divisions else DIVISIONS:
        try:
            pts, wC = _log_along(h, geo.resample(C, 0.02 * margin), 0.25 * 2 * math.pi / M)
            Z, W, segs, delta = _staircase(h, pts, wC, D, margin, rho0, theta0, M)
        except RefitError as exc:
            last = exc
            continue
        if not (_encloses(Z, D) and _within_margin(Z, D, margin)):
            last = RefitError(f"staircase with {M} divisions leaves the margin")
            continue
        if not (_clear_of(Z, zeros, 1e-6) and _clear_of(Z, crits, 1e-6)):
            last = RefitError("boundary passes through a zero or critical point of h")
            continue
        return classify(RefittedBoundary(h, Z, W, segs, [], (rho0, theta0, delta)))
    raise RefitError(f"could not refit the domain: {last}")


# --------------------------------------------------------------------------
# classification and neighbours


def classify(bd: RefittedBoundary) -> RefittedBoundary:
    """Roles from the sign of |h| and arg h changes along positive orientation."""
    segs = []
    for s in bd.segments:
        w0, w1 = bd.w[s.start], bd.w[s.stop]
        if s.tag == "gradient":
            d = w1.real - w0.real
            if abs(d) < ROLE_TOL:
                raise RefitError(f"gradient segment at arg {s.value:.6g} has no |h| change")
            role = "left" if d < 0 else "right"
        else:
            d = w1.imag - w0.imag
            if bd.single_level is None and abs(d) < ROLE_TOL:
                raise RefitError(f"level segment at |h|={s.value:.6g} has no arg change")
            role = "top" if d >= 0 else "bottom"
        segs.append(Segment(s.tag, s.value, s.start, s.stop, role))
    corners = []
    if len(segs) > 1:
        for a, b in zip(segs, segs[1:] + segs[:1]):
            k = a.stop % (len(bd.z) - 1)
            d1 = bd.z[a.stop] - bd.z[a.stop - 1]
            nb = b.start + 1 if b.start + 1 < len(bd.z) else 1
            d2 = bd.z[nb] - bd.z[b.start]
            cross = (np.conj(d1) * d2).imag
            corners.append((k, "outside" if cross > 0 else "inside"))
    return replace(bd, segments=segs, corners=corners)


def _locate_index(bd: RefittedBoundary, u: complex) -> int:
    return int(np.argmin(np.abs(bd.z[:-1] - u)))


def _refine(h, z0, target):
    dh = h.derivative()
    z = complex(z0)
    for _ in range(30):
        step = (h(z) - target) / dh(z)
        z -= step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    return z


def crossing_point(bd: RefittedBoundary, k: int, rho: float) -> tuple:
    """Point between dense samples k and k+1 where Re w = rho."""
    w0, w1 = bd.w[k], bd.w[k + 1]
    t = (rho - w0.real) / (w1.real - w0.real)
    w = w0 + t * (w1 - w0)
    z = bd.z[k] + t * (bd.z[k + 1] - bd.z[k])
    return _refine(bd.h, z, np.exp(w)), k + t, w


def neighbor(bd: RefittedBoundary, u: complex) -> complex:
    """Next boundary point with the same |h|, walking away from u into |h| < |h(u)|."""
    k = _locate_index(bd, u)
    n = len(bd.z) - 1
    for kk, kind in bd.corners:
        if kind == "inside" and kk == k:
            raise NeighborError("u is an inside corner")
    seg = bd.segment_at(k)
    if seg.tag != "gradient":
        raise NeighborError("u is not on a gradient segment")
    rho = math.log(abs(bd.h(u)))
    fwd = seg.role == "left"
    # walk the periodic dense path
    wr = bd.w.real
    j = k
    for _ in range(2 * n):
        a, b = (j, j + 1) if fwd else (j - 1, j)
        a %= n
        b = a + 1
        if j != k and ((wr[a] - rho) * (wr[b] - rho) <= 0) and wr[a] != wr[b]:
            z, _, _ = crossing_point(bd, a, rho)
            if abs(z - u) > 1e-9:
                return z
        j = (j + 1) % n if fwd else (j - 1) % n
    raise NeighborError("no boundary point with matching |h|")


@dataclass
class Stretch:
    """Maximal boundary arc below a level, in positive orientation."""

    start: float  # fractional dense index of u
    stop: float  # fractional dense index of N(u), possibly past the seam
    u: complex
    v: complex
    arg_start: float
    arg_stop: float

    @property
    def delta(self) -> float:
        return self.arg_stop - self.arg_start

    def covers(self, x: float, n: int) -> bool:
        for shift in (-n, 0, n):
            if self.start <= x + shift <= self.stop:
                return True
        return False


def stretches(bd: RefittedBoundary, level: float) -> list:
    rho = math.log(level)
    n = len(bd.z) - 1
    wr = bd.w.real
    if np.all(wr[:-1] < rho):
        return [Stretch(0.0, float(n), bd.z[0], bd.z[0], bd.w[0].imag, bd.w[-1].imag)]
    downs, ups = [], []
    for k in range(n):
        a, b = wr[k] - rho, wr[k + 1] - rho
        if a >= 0 > b:
            downs.append(k)
        elif a < 0 <= b:
            ups.append(k)
    out = []
    period = bd.w[-1].imag - bd.w[0].imag
    for k in downs:
        later = [j for j in ups if j > k]
        j, wrap = (later[0], 0) if later else (ups[0], 1)
        zu, su, wu = crossing_point(bd, k, rho)
        zv, sv, wv = crossing_point(bd, j, rho)
        out.append(Stretch(su, sv + wrap * n, zu, zv, wu.imag, wv.imag + wrap * period))
    out.sort(key=lambda s: s.start)
    return out

"""Argument-principle winding counts and root isolation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expr import AnalyticFunction, as_function

ZERO_TOL = 1e-10
MAX_ITER = 100
CELL_DIAMETER = 1e-3
MULTIPLICITY_RADIUS = 1e-4


class RootError(ArithmeticError):
    pass


class PathNearZero(RootError):
    pass


class BoundaryTooClose(RootError):
    pass


class NonConvergence(RootError):
    pass


@dataclass(frozen=True)
class RootRecord:
    location: complex
    multiplicity: int
    kind: str  # "zero" or "critical"

    def to_json(self):
        return {"re": self.location.real, "im": self.location.imag,
                "multiplicity": self.multiplicity, "kind": self.kind}


def _unwrap_increments(g, z0, z1, v0, v1, depth, tol, out):
    d = np.angle(v1 / v0)
    if abs(d) <= math.pi / 2 or depth > 40:
        if abs(d) > math.pi / 2:
            raise PathNearZero("argument jump could not be resolved")
        out.append(d)
        return
    zm = 0.5 * (z0 + z1)
    vm = complex(g(zm))
    if abs(vm) <= tol:
        raise PathNearZero(f"path passes within tolerance of a zero near {zm}")
    _unwrap_increments(g, z0, zm, v0, vm, depth + 1, tol, out)
    _unwrap_increments(g, zm, z1, vm, v1, depth + 1, tol, out)


def arg_change(f, path, *, zero_tol: float = ZERO_TOL) -> float:
    """Net continuous change of ``arg f`` along a polyline (not auto-closed)."""
    g = as_function(f) if not callable(f) else f
    path = np.asarray(path, dtype=complex)
    vals = np.asarray(g(path), dtype=complex)
    if np.any(np.abs(vals) <= zero_tol):
        k = int(np.argmin(np.abs(vals)))
        raise PathNearZero(f"path passes within tolerance of a zero near {path[k]}")
    steps = np.angle(vals[1:] / vals[:-1])
    total = 0.0
    bad = np.abs(steps) > math.pi / 2
    total += float(np.sum(steps[~bad]))
    for k in np.nonzero(bad)[0]:
        out: list[float] = []
        _unwrap_increments(g, path[k], path[k + 1], vals[k], vals[k + 1], 0, zero_tol, out)
        total += sum(out)
    return total


def winding_count(f, closed_path, *, zero_tol: float = ZERO_TOL, residue_tol: float = 0.05) -> int:
    """Number of zeros (with multiplicity) of ``f`` enclosed by a closed polyline."""
    path = np.asarray(closed_path, dtype=complex)
    if path[0] != path[-1]:
        path = np.append(path, path[0])
    w = arg_change(f, path, zero_tol=zero_tol) / (2 * math.pi)
    n = round(w)
    if abs(w - n) >= residue_tol:
        # one refinement pass before giving up
        fine = _densify(path, 8)
        w = arg_change(f, fine, zero_tol=zero_tol) / (2 * math.pi)
        n = round(w)
        if abs(w - n) >= residue_tol:
            raise RootError(f"winding residue {abs(w - n):.3g} too large")
    return int(n)


def _densify(path, k):
    t = np.linspace(0, 1, k, endpoint=False)
    seg = path[:-1, None] + (path[1:] - path[:-1])[:, None] * t[None, :]
    return np.append(seg.ravel(), path[-1])


def circle(center: complex, radius: float, n: int = 256) -> np.ndarray:
    t = np.linspace(0, 2 * math.pi, n + 1)
    return center + radius * np.exp(1j * t)


def rectangle_path(x0, x1, y0, y1, n_per_side: int = 64) -> np.ndarray:
    corners = [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1), complex(x0, y0)]
    pts = []
    for a, b in zip(corners[:-1], corners[1:]):
        t = np.linspace(0, 1, n_per_side, endpoint=False)
        pts.append(a + (b - a) * t)
    pts.append(np.array([corners[0]]))
    return np.concatenate(pts)


def newton_refine(g: AnalyticFunction, z0: complex, multiplicity: int = 1, *,
                  zero_tol: float = ZERO_TOL, max_iter: int = MAX_ITER) -> complex:
    """Modified Newton iteration ``z -= m g/g'`` until ``|g| <= zero_tol``."""
    dg = g.derivative()
    z = complex(z0)
    for _ in range(max_iter):
        v = g(z)
        if abs(v) <= zero_tol:
            # a couple of extra steps tighten location for simple roots
            for _ in range(2):
                d = dg(z)
                if d == 0:
                    break
                step = multiplicity * g(z) / d
                if not np.isfinite(step) or abs(step) > 1e-6:
                    break
                z -= step
            return z
        d = dg(z)
        if d == 0:
            z += 1e-9
            continue
        z -= multiplicity * v / d
        if not np.isfinite(z):
            break
    v = g(z)
    if abs(v) <= zero_tol:
        return z
    raise NonConvergence(f"Newton did not converge near {z0} (|g|={abs(v):.3g})")


def find_roots(f, region, kind: str = "zero", *, zero_tol: float = ZERO_TOL,
               root_tol: float = 1e-8, max_iter: int = MAX_ITER) -> list[RootRecord]:
    """All zeros of ``f`` (or of ``f'`` when ``kind == "critical"``) in a rectangle.

    ``region`` is ``(xmin, xmax, ymin, ymax)``.  Cells are subdivided by
    argument-principle counts until their diameter reaches 1e-3, then refined
    with modified Newton; multiplicity is the winding of a small circle.
    """
    f = as_function(f)
    g = f if kind == "zero" else f.derivative()
    if kind not in ("zero", "critical"):
        raise ValueError("kind must be 'zero' or 'critical'")
    x0, x1, y0, y1 = map(float, region)
    try:
        total = winding_count(g, rectangle_path(x0, x1, y0, y1), zero_tol=root_tol)
    except PathNearZero as exc:
        raise BoundaryTooClose(str(exc)) from exc
    if g.is_polynomial and g.degree == 0:
        return []
    found: list[tuple[complex, int]] = []
    _subdivide(g, (x0, x1, y0, y1), total, found, zero_tol, root_tol, max_iter)
    found.sort(key=lambda r: (round(r[0].real, 9), round(r[0].imag, 9)))
    records = [RootRecord(z, m, kind) for z, m in found]
    if sum(r.multiplicity for r in records) != total:
        raise RootError(f"found multiplicity {sum(r.multiplicity for r in records)} "
                        f"but boundary winding is {total}")
    return records


def _cell_count(g, cell, root_tol):
    # inside the region only exact zeros on a cut are fatal; the adaptive
    # unwrapping resolves near misses
    return winding_count(g, rectangle_path(*cell, n_per_side=32), zero_tol=1e-300)


def _split(g, cell, root_tol):
    x0, x1, y0, y1 = cell
    for shift in (0.0127, -0.0311, 0.0473, -0.1131, 0.1713, -0.2307):
        try:
            if x1 - x0 >= y1 - y0:
                xm = x0 + (0.5 + shift) * (x1 - x0)
                parts = [(x0, xm, y0, y1), (xm, x1, y0, y1)]
            else:
                ym = y0 + (0.5 + shift) * (y1 - y0)
                parts = [(x0, x1, y0, ym), (x0, x1, ym, y1)]
            return [(p, _cell_count(g, p, root_tol)) for p in parts]
        except RootError:
            continue
    raise RootError(f"could not split cell {cell} away from roots")


def _polish_multiple(g, z, m, zero_tol):
    # an m-fold root is a simple root of the (m-1)-th derivative
    h = g
    for _ in range(m - 1):
        h = h.derivative()
    try:
        z2 = newton_refine(h, z, 1, zero_tol=1e-300, max_iter=8)
    except NonConvergence:
        z2 = z
    dh = h.derivative()
    for _ in range(8):
        d = dh(z2)
        if d == 0:
            break
        step = h(z2) / d
        z2 -= step
        if abs(step) < 1e-16 * max(1.0, abs(z2)):
            break
    if abs(z2 - z) < 1e-3 and abs(g(z2)) <= max(abs(g(z)), zero_tol):
        return z2
    return z


def _subdivide(g, cell, count, found, zero_tol, root_tol, max_iter):
    if count == 0:
        return
    x0, x1, y0, y1 = cell
    diam = math.hypot(x1 - x0, y1 - y0)
    if diam <= CELL_DIAMETER:
        centre = complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        try:
            z = newton_refine(g, centre, count, zero_tol=zero_tol, max_iter=max_iter)
        except NonConvergence:
            z = None
        if z is not None and count > 1:
            z = _polish_multiple(g, z, count, zero_tol)
        if z is not None:
            try:
                m = winding_count(g, circle(z, MULTIPLICITY_RADIUS, 64), zero_tol=0.0)
            except RootError:
                m = -1
            if m == count or diam < 1e-9:
                found.append((z, count))
                return
        if diam < 1e-9:
            raise NonConvergence(f"could not resolve root cluster near {centre}")
    for part, c in _split(g, cell, root_tol):
        _subdivide(g, part, c, found, zero_tol, root_tol, max_iter)

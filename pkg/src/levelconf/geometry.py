"""Small polyline helpers shared by the tracer, extractor and extender."""
from __future__ import annotations

import numpy as np
from shapely.geometry import Polygon


def close(poly) -> np.ndarray:
    poly = np.asarray(poly, dtype=complex)
    if len(poly) and poly[0] != poly[-1]:
        poly = np.append(poly, poly[0])
    return poly


def signed_area(poly) -> float:
    p = close(poly)
    x, y = p.real, p.imag
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def winding_number(poly, points) -> np.ndarray:
    """Winding number of a closed polyline around each query point."""
    p = close(poly)
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    a = p[:-1][None, :] - pts[:, None]
    b = p[1:][None, :] - pts[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        ang = np.angle(b / a)
    ang = np.nan_to_num(ang)
    return np.rint(ang.sum(axis=1) / (2 * np.pi)).astype(int)


def contains(poly, points) -> np.ndarray:
    return winding_number(poly, points) != 0


def arclength(poly) -> np.ndarray:
    poly = np.asarray(poly, dtype=complex)
    s = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(poly)))])
    return s


def resample(poly, step: float) -> np.ndarray:
    poly = np.asarray(poly, dtype=complex)
    s = arclength(poly)
    if s[-1] == 0:
        return poly[:1].copy()
    n = max(2, int(np.ceil(s[-1] / step)) + 1)
    t = np.linspace(0, s[-1], n)
    return np.interp(t, s, poly.real) + 1j * np.interp(t, s, poly.imag)


def interior_point(poly) -> complex:
    """A point strictly inside a closed polyline."""
    p = close(poly)
    shp = Polygon(np.column_stack([p.real, p.imag]))
    if not shp.is_valid:
        shp = shp.buffer(0)
    q = shp.representative_point()
    return complex(q.x, q.y)


def hausdorff(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def segments_intersect(p1, p2, q1, q2) -> complex | None:
    """Intersection point of segments p1p2 and q1q2, if any."""
    r = p2 - p1
    s = q2 - q1
    den = (r.conjugate() * s).imag
    if den == 0:
        return None
    qp = q1 - p1
    t = (qp.conjugate() * s).imag / den
    u = (qp.conjugate() * r).imag / den
    if 0 <= t <= 1 and 0 <= u <= 1:
        return p1 + t * r
    return None

"""Jordan domains given as disks, polygons or sublevel components."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import shapely
from shapely.geometry import Polygon

from . import geometry as geo


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    boundary: tuple  # closed counterclockwise polyline, complex points
    kind: str = "polygon"
    params: tuple = ()

    @classmethod
    def disk(cls, center: complex, radius: float, n: int = 2048) -> "Domain":
        t = np.linspace(0, 2 * math.pi, n + 1)
        pts = complex(center) + radius * np.exp(1j * t)
        pts[-1] = pts[0]
        return cls(tuple(pts), "disk", (complex(center), float(radius)))

    @classmethod
    def polygon(cls, points) -> "Domain":
        pts = geo.close(np.asarray(points, dtype=complex))
        if len(pts) < 4:
            raise DomainError("polygon needs at least three vertices")
        if geo.signed_area(pts) < 0:
            pts = pts[::-1]
        return cls(tuple(pts), "polygon", ())

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.boundary, dtype=complex)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.kind == "disk":
            c, r = self.params
            return np.abs(z - c) < r
        poly = Polygon(np.column_stack([self.points.real, self.points.imag]))
        return shapely.contains_xy(poly, z.real, z.imag)

    @property
    def bbox(self) -> tuple:
        p = self.points
        return (p.real.min(), p.real.max(), p.imag.min(), p.imag.max())

    def dense_boundary(self, step: float) -> np.ndarray:
        return geo.resample(self.points, step)

    def to_dict(self) -> dict:
        if self.kind == "disk":
            c, r = self.params
            return {"kind": "disk", "center": [c.real, c.imag], "radius": r}
        return {"kind": "polygon", "points": [[z.real, z.imag] for z in self.points[:-1]]}

    @classmethod
    def from_dict(cls, d: dict) -> "Domain":
        if "domain" in d:  # bare polyline form
            return cls.polygon([complex(x, y) for x, y in d["domain"]])
        kind = d.get("kind")
        if kind == "disk":
            c = d["center"]
            return cls.disk(complex(c[0], c[1]), float(d["radius"]))
        if kind == "polygon":
            return cls.polygon([complex(x, y) for x, y in d["points"]])
        raise DomainError(f"unknown domain kind {kind!r}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Domain":
        return cls.from_dict(json.loads(text))

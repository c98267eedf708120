"""SVG 1.1 rendering of configurations and extended configurations.

Explicit zeros and critical points are filled glyphs; implied ones are open.
Extension paths and gradient maps are dashed.
"""
from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from . import config as cf
from .tracer import TraceError, trace_gradient

LAYERS = ("boundary", "level_curves", "extension_paths", "gradient_maps", "zeros",
          "critical_points", "implied", "distinguished")

_STYLE = {
    "boundary": dict(stroke="#888888", fill="none"),
    "level_curves": dict(stroke="#1f4e9c", fill="none"),
    "extension_paths": dict(stroke="#c0392b", fill="none", **{"stroke-dasharray": "6 4"}),
    "gradient_maps": dict(stroke="#27ae60", fill="none", **{"stroke-dasharray": "3 3"}),
}


@dataclass
class RenderSpec:
    width: int = 800
    height: int = 800
    viewport: tuple | None = None  # (xmin, xmax, ymin, ymax); None fits the scene
    layers: tuple = LAYERS

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("canvas must be nonempty")
        if self.viewport is not None:
            x0, x1, y0, y1 = self.viewport
            if not (x1 > x0 and y1 > y0):
                raise ValueError("viewport must be nonempty")
        bad = set(self.layers) - set(LAYERS)
        if bad:
            raise ValueError(f"unknown layers {sorted(bad)}")


@dataclass
class Glyph:
    kind: str  # "zero" | "vertex" | "mark"
    point: complex
    implied: bool = False
    label: str = ""


@dataclass
class Scene:
    curves: list = field(default_factory=list)  # (layer, points)
    glyphs: list = field(default_factory=list)

    def add_curve(self, layer, pts):
        pts = np.asarray(pts, dtype=complex)
        if len(pts) > 1:
            self.curves.append((layer, pts))

    def extent(self):
        pts = [p for _, c in self.curves for p in c] + [g.point for g in self.glyphs]
        if not pts:
            return (-1.0, 1.0, -1.0, 1.0)
        a = np.asarray(pts)
        return (a.real.min(), a.real.max(), a.imag.min(), a.imag.max())


# --------------------------------------------------------------------------
# scenes


def scene_from_config(config: cf.Configuration, f=None, *, gradients: bool = True) -> Scene:
    """Geometry stored by the extractor, or a schematic layout when absent."""
    sc = Scene()
    if "graph" in config.meta or "point" in config.meta:
        _geometric(config, f, sc, gradients)
    else:
        _schematic(config, 0j, 1.0, sc)
    return sc


def _geometric(node, f, sc, gradients):
    m = node.member
    if isinstance(m, cf.SinglePoint):
        p = node.meta.get("point")
        if p is not None:
            sc.glyphs.append(Glyph("zero", complex(p), m.implied, _zlabel(m)))
        return
    g = node.meta.get("graph")
    marks = node.meta.get("marks", {})
    if g is not None:
        for arc in g.arcs:
            sc.add_curve("level_curves", arc.points)
        for v in g.vertices:
            sc.glyphs.append(Glyph("vertex", v.point, bool(v.implied)))
    for p in marks.values():
        sc.glyphs.append(Glyph("mark", complex(p)))
    for fd, child in zip(m.faces, node.children):
        if gradients and f is not None and isinstance(child.member, cf.GraphMember):
            for x in fd.marks:
                try:
                    path = trace_gradient(f, marks[x], "descent", child.member.H)
                    sc.add_curve("gradient_maps", path.points)
                except (TraceError, KeyError):
                    pass
        _geometric(child, f, sc, gradients)


def _zlabel(m):
    return "" if m.Z == 1 else str(m.Z)


def _schematic(node, c: complex, r: float, sc: Scene):
    m = node.member
    if isinstance(m, cf.SinglePoint):
        sc.glyphs.append(Glyph("zero", c, m.implied, _zlabel(m)))
        return
    k = len(node.children)
    if m.is_loop:
        sc.add_curve("level_curves", c + r * np.exp(1j * np.linspace(0, 2 * math.pi, 97)))
        sc.glyphs.append(Glyph("mark", c + r))
        _schematic(node.children[0], c, 0.7 * r, sc)
        return
    # faces as a row of lobes, vertices on the seams between them
    rr = r / max(k, 1)
    xs = [c.real - r + rr * (2 * i + 1) for i in range(k)]
    for x, child in zip(xs, node.children):
        cc = complex(x, c.imag)
        sc.add_curve("level_curves", cc + rr * np.exp(1j * np.linspace(0, 2 * math.pi, 97)))
        _schematic(child, cc, 0.7 * rr, sc)
    nv = len(m.vertex_args)
    for v in range(nv):
        x = c.real - r + 2 * r * (v + 1) / (nv + 1)
        implied = bool(m.implied_vertices and m.implied_vertices[v])
        sc.glyphs.append(Glyph("vertex", complex(x, c.imag), implied))


def scene_from_extended(result, *, gradients: bool = False) -> Scene:
    """Refitted boundary, extension paths and implied points of a build."""
    base = None
    if "graph" in result.config.meta:
        base = Scene()
        _geometric(result.config, result.boundary.h if gradients else None, base, gradients)
    return scene_from_stages(result.stages, base)


def scene_from_stages(stages: dict, base: Scene | None = None) -> Scene:
    """Scene from the JSON stage record of an extension build.

    Swept members carry no plane geometry, so only the explicit zeros, the
    refitted boundary, extension paths and implied points are drawn.
    """
    sc = base or Scene()
    seen = {(round(g.point.real, 9), round(g.point.imag, 9)) for g in sc.glyphs}
    segs = stages.get("refit", {}).get("segments", [])
    for s in segs:
        sc.add_curve("boundary", [complex(x, y) for x, y in s["polyline"]])
    ring = np.array([complex(x, y) for s in segs for x, y in s["polyline"]])
    for ext in stages.get("extensions", []):
        for z in ext.get("zeros", []):
            key = (round(z[0], 9), round(z[1], 9))
            if key not in seen:
                seen.add(key)
                sc.glyphs.append(Glyph("zero", complex(*z)))
        for path in ext.get("paths", []):
            sc.add_curve("extension_paths", [complex(x, y) for x, y in path["polyline"]])
    for e in stages.get("implied", []):
        if e["event"] == "implied zero":
            u = complex(*e["stretch"])
            sc.glyphs.append(Glyph("zero", u + _outward(ring, u), True,
                                   "" if e["multiplicity"] == 1 else str(e["multiplicity"])))
        elif e["event"] == "implied critical point" and "near" in e:
            u = complex(*e["near"])
            sc.glyphs.append(Glyph("vertex", u + _outward(ring, u), True))
        elif e["event"] == "explicit critical point":
            sc.glyphs.append(Glyph("vertex", complex(*e["point"])))
    return sc


def _outward(ring, u):
    """Small outward normal step at the boundary point nearest ``u``."""
    if len(ring) < 3:
        return 0j
    k = int(np.argmin(np.abs(ring - u)))
    t = ring[(k + 1) % len(ring)] - ring[k - 1]
    scale = 0.04 * max(np.ptp(ring.real), np.ptp(ring.imag))
    if abs(t) == 0:
        return 0j
    return -1j * t / abs(t) * scale


# --------------------------------------------------------------------------
# SVG


def _fmt(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def to_svg(scene: Scene, spec: RenderSpec | None = None) -> str:
    spec = spec or RenderSpec()
    x0, x1, y0, y1 = spec.viewport or _padded(scene.extent())
    s = min(spec.width / (x1 - x0), spec.height / (y1 - y0))

    def xy(p):
        return (spec.width / 2 + (p.real - (x0 + x1) / 2) * s,
                spec.height / 2 - (p.imag - (y0 + y1) / 2) * s)

    svg = ET.Element("svg", {"xmlns": "http://www.w3.org/2000/svg", "version": "1.1",
                             "width": str(spec.width), "height": str(spec.height),
                             "viewBox": f"0 0 {spec.width} {spec.height}"})
    ET.SubElement(svg, "rect", {"width": "100%", "height": "100%", "fill": "white"})
    groups = {}

    def group(name):
        if name not in groups:
            groups[name] = ET.SubElement(svg, "g", {"class": name})
        return groups[name]

    for layer, pts in scene.curves:
        if layer not in spec.layers:
            continue
        d = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in map(xy, pts))
        ET.SubElement(group(layer), "polyline",
                      {"points": d, "stroke-width": "1.5", **_STYLE[layer]})
    for g in scene.glyphs:
        layer = _glyph_layer(g)
        if layer not in spec.layers:
            continue
        a, b = xy(g.point)
        cls = g.kind + (" implied" if g.implied else "")
        if g.kind == "mark":
            ET.SubElement(group(layer), "rect", {
                "class": cls, "x": _fmt(a - 2.5), "y": _fmt(b - 2.5), "width": "5",
                "height": "5", "fill": "#e67e22"})
        else:
            color = "#000000" if g.kind == "zero" else "#8e44ad"
            ET.SubElement(group(layer), "circle", {
                "class": cls, "cx": _fmt(a), "cy": _fmt(b), "r": "5",
                "stroke": color, "stroke-width": "1.5",
                "fill": "white" if g.implied else color})
        if g.label:
            t = ET.SubElement(group(layer), "text", {"x": _fmt(a + 7), "y": _fmt(b - 7),
                                                     "font-size": "12"})
            t.text = g.label
    ET.indent(svg)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(svg, encoding="unicode") + "\n"


def _glyph_layer(g: Glyph) -> str:
    if g.implied:
        return "implied"
    return {"zero": "zeros", "vertex": "critical_points", "mark": "distinguished"}[g.kind]


def _padded(ext):
    x0, x1, y0, y1 = ext
    w = max(x1 - x0, y1 - y0, 1e-6)
    pad = 0.08 * w
    return (x0 - pad, x1 + pad, y0 - pad, y1 + pad)


def render_config(config: cf.Configuration, f=None, spec: RenderSpec | None = None) -> str:
    return to_svg(scene_from_config(config, f), spec)


def render_extended(result, spec: RenderSpec | None = None) -> str:
    return to_svg(scene_from_extended(result), spec)


def count_glyphs(svg: str) -> dict:
    """Glyph counts by class, e.g. ``{"vertex": 1, "zero": 2}``."""
    root = ET.fromstring(svg.split("\n", 1)[1] if svg.startswith("<?xml") else svg)
    out = {}
    for el in root.iter():
        cls = el.get("class", "")
        if el.tag.endswith(("circle", "rect")) and cls:
            out[cls] = out.get(cls, 0) + 1
    return out

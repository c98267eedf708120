from xml.etree import ElementTree as ET

import pytest

from levelconf import config as cf
from levelconf import samples
from levelconf.expr import AnalyticFunction
from levelconf.extender import build_extended
from levelconf.extractor import extract
from levelconf.render import (LAYERS, Glyph, RenderSpec, Scene, count_glyphs, render_config,
                              render_extended, scene_from_config, to_svg)


def parse(svg):
    return ET.fromstring(svg.split("\n", 1)[1])


def test_spec_validation():
    with pytest.raises(ValueError):
        RenderSpec(width=0)
    with pytest.raises(ValueError):
        RenderSpec(viewport=(1, 0, 0, 1))
    with pytest.raises(ValueError):
        RenderSpec(layers=("nope",))
    assert RenderSpec().layers == LAYERS


def test_geometric_scene_counts():
    f = AnalyticFunction.parse("z^3-3*z")
    sc = scene_from_config(extract(f, 3.0), f)
    kinds = [g.kind for g in sc.glyphs]
    assert kinds.count("zero") == 3 and kinds.count("vertex") == 2
    assert any(layer == "gradient_maps" for layer, _ in sc.curves)


def test_schematic_scene_without_geometry(corpus):
    c = cf.from_dict(cf.to_dict(corpus["z^3-3z+1@4"]))
    svg = render_config(c)
    counts = count_glyphs(svg)
    assert counts["zero"] == 3 and counts["vertex"] == 2


def test_implied_glyphs_are_open():
    sc = Scene(glyphs=[Glyph("zero", 0j, True), Glyph("vertex", 1 + 0j, True)])
    root = parse(to_svg(sc))
    circles = [e for e in root.iter() if e.tag.endswith("circle")]
    assert {c.get("fill") for c in circles} == {"white"}
    assert sorted(c.get("class") for c in circles) == ["vertex implied", "zero implied"]


def test_viewport_maps_to_canvas():
    sc = Scene(glyphs=[Glyph("zero", 0j)])
    root = parse(to_svg(sc, RenderSpec(200, 100, (-1, 1, -1, 1))))
    c = next(e for e in root.iter() if e.tag.endswith("circle"))
    assert (float(c.get("cx")), float(c.get("cy"))) == (100.0, 50.0)


def test_labels_for_multiple_zeros():
    svg = render_config(extract("z^3", 1.0), AnalyticFunction.parse("z^3"))
    root = parse(svg)
    texts = [e.text for e in root.iter() if e.tag.endswith("text")]
    assert texts == ["3"]


def test_render_extended_sine():
    ex = samples.sine_example()
    res = build_extended(ex["h"], ex["domain"], ex["margin"], anchor=ex["anchor"])
    svg = render_extended(res)
    counts = count_glyphs(svg)
    assert counts["zero implied"] == 1 and counts["vertex implied"] == 1
    root = parse(svg)
    groups = {e.get("class") for e in root if e.tag.endswith("g")}
    assert {"boundary", "extension_paths"} <= groups

"""Bundled worked example: sin on a notched rectangle around its zero at 0."""
from __future__ import annotations

import json
from importlib import resources

from .domain import Domain
from .expr import AnalyticFunction


def load(name: str = "sine_domain.json") -> dict:
    text = resources.files("levelconf.data").joinpath(name).read_text()
    return json.loads(text)


def sine_example() -> dict:
    """Function, domain, margin and lattice anchor for the sine example.

    The notch tip sits where ``|sin|`` reaches 0.85 on the negative real
    axis, so the extension acquires one implied zero and one implied
    critical point of modulus 0.85 and argument pi.
    """
    d = load()
    return {
        "h": AnalyticFunction.parse(d["func"]),
        "domain": Domain.from_dict(d),
        "margin": float(d["margin"]),
        "anchor": tuple(d["anchor"]),
    }

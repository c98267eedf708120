import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levelconf import config as cf
from levelconf import samples
from levelconf.boundary import NeighborError, neighbor, refit_domain
from levelconf.domain import Domain
from levelconf.expr import AnalyticFunction
from levelconf.extender import (ExtensionError, build_extended, compute_delta_arg,
                                full_extension, implied_count, least_delta, marks_in)
from levelconf.extractor import extract

TWO_PI = 2 * math.pi


@pytest.fixture(scope="module")
def sine():
    ex = samples.sine_example()
    res = build_extended(ex["h"], ex["domain"], ex["margin"], anchor=ex["anchor"])
    return ex, res


# ---------------------------------------------------------------- arithmetic


def test_least_delta_values():
    assert least_delta(3 * math.pi / 2) == pytest.approx(3 * math.pi / 2)
    assert least_delta(-math.pi / 2) == pytest.approx(3 * math.pi / 2)
    assert least_delta(0.0) == pytest.approx(TWO_PI)


@given(st.floats(-50, 50, allow_nan=False))
def test_least_delta_is_positive_congruent_and_minimal(a):
    d = least_delta(a)
    assert d > 0 and d >= a
    assert abs(math.remainder(d - a, TWO_PI)) < 1e-9
    if a <= 0:
        assert d - TWO_PI <= 1e-9


def test_implied_count():
    assert implied_count(4 * math.pi) == 2
    assert implied_count(0.0) == 0
    with pytest.raises(ExtensionError):
        implied_count(3 * math.pi)
    with pytest.raises(ExtensionError):
        implied_count(-TWO_PI)


def test_compute_delta_arg():
    assert compute_delta_arg(-math.pi / 2) == pytest.approx(3 * math.pi / 2)
    assert compute_delta_arg(-math.pi / 2, 1) == pytest.approx(3 * math.pi / 2)
    assert compute_delta_arg(math.pi, 1) == pytest.approx(3 * math.pi)


def test_marks_in():
    assert marks_in(0.0, TWO_PI) == 0
    assert marks_in(-0.1, 0.2) == 1
    assert marks_in(0.5, 4 * math.pi) == 2


# ---------------------------------------------------------------- refit


def test_refit_single_level_disk():
    bd = refit_domain(AnalyticFunction.parse("z^2"), Domain.disk(0, 1), 0.1)
    assert bd.single_level is not None
    assert len(bd.segments) == 1 and bd.corners == []
    assert bd.winding == 2
    h = np.abs(bd.z ** 2)
    assert np.ptp(h) < 1e-6 * bd.single_level


def test_refit_small_disk_one_oval():
    res = build_extended("z^2-1", Domain.disk(1, 0.5), 0.1)
    assert cf.canonical_form(res.config) == b'["zero",1]'
    assert not res.implied_zeros and not res.implied_critical


def test_refit_stays_within_margin(sine):
    ex, res = sine
    D = ex["domain"]
    z = res.boundary.z
    assert D.contains(z).sum() == 0
    d = np.abs(z[:, None] - D.dense_boundary(0.01)[None, :]).min(axis=1)
    assert d.max() <= ex["margin"] + 1e-9


def test_segments_alternate_and_lie_on_lattice(sine):
    _, res = sine
    bd = res.boundary
    tags = [s.tag for s in bd.segments]
    assert all(a != b for a, b in zip(tags, tags[1:] + tags[:1]))
    rho0, theta0, delta = bd.lattice
    w = bd.w
    for s in bd.segments:
        part = w[s.start:s.stop + 1]
        if s.tag == "level":
            k = (part.real - rho0) / delta
            assert np.ptp(part.real) < 1e-6
        else:
            k = (part.imag - theta0) / delta
            assert np.ptp(part.imag) < 1e-6
        assert np.abs(k - np.round(k)).max() < 1e-6


def test_roles_match_outward_derivatives(sine):
    ex, res = sine
    h, bd = ex["h"], res.boundary
    eps = 1e-6
    checked = 0
    for s in bd.segments:
        if s.stop - s.start < 2:
            continue
        k = (s.start + s.stop) // 2
        z = bd.z[k]
        t = bd.z[k + 1] - bd.z[k - 1]
        out = -1j * t / abs(t)
        if s.tag == "gradient":
            grows = np.angle(h(z + eps * out) / h(z)) > 0
            assert grows == (s.role == "left")
        else:
            grows = abs(h(z + eps * out)) > abs(h(z))
            assert grows == (s.role == "top")
        checked += 1
    assert checked > 10


def test_reversed_swaps_left_and_right(sine):
    from levelconf.boundary import classify
    _, res = sine
    bd = res.boundary
    rev = classify(bd.reversed())
    roles = [s.role for s in bd.segments][::-1]
    swap = {"left": "right", "right": "left", "top": "bottom", "bottom": "top"}
    assert [s.role for s in rev.segments] == [swap[r] for r in roles]


def test_neighbor_is_an_involution(sine):
    ex, res = sine
    bd = res.boundary
    h = ex["h"]
    rng = np.random.default_rng(7)
    grads = [s for s in bd.segments if s.tag == "gradient" and s.stop - s.start >= 2]
    n = len(bd.z) - 1
    for _ in range(50):
        s = grads[rng.integers(len(grads))]
        k = int(rng.integers(s.start + 1, s.stop))
        u = bd.z[k]
        v = neighbor(bd, u)
        assert abs(abs(h(v)) - abs(h(u))) < 1e-8 * abs(h(u))
        assert abs(neighbor(bd, v) - u) < 1e-6
        # the boundary arc walked from u toward its neighbour stays below |h(u)|
        kv = int(np.argmin(np.abs(bd.z[:-1] - v)))
        idx = np.arange(k + 1, k + ((kv - k) % n)) if s.role == "left" else \
            np.arange(kv + 1, kv + ((k - kv) % n))
        inner = bd.w.real[idx % n]
        if len(inner) > 2:
            assert inner[1:-1].max() < math.log(abs(h(u))) + 1e-9


def test_neighbor_rejects_level_points(sine):
    _, res = sine
    bd = res.boundary
    s = next(s for s in bd.segments if s.tag == "level" and s.stop - s.start >= 2)
    with pytest.raises(NeighborError):
        neighbor(bd, bd.z[(s.start + s.stop) // 2])


# ---------------------------------------------------------------- extension


def test_full_extension_of_closed_curve_has_no_paths(sine):
    ex, res = sine
    # a level below the notch tip is a closed curve around the explicit zero
    fe = full_extension(ex["h"], res.boundary, 0j, 0.3)
    assert fe.paths == []
    assert fe.Z == 1 and fe.implied_zeros == 0
    assert abs(fe.zeros[0]) < 1e-9


def test_sine_extension(sine):
    ex, res = sine
    assert len(res.implied_zeros) == 1
    assert len(res.implied_critical) == 1
    crit = res.implied_critical[0]
    assert crit["level"] == pytest.approx(0.85, rel=1e-9)
    assert crit["arg"] == pytest.approx(math.pi, abs=1e-9)
    assert cf.config_equal(res.config, extract("z^2 - sqrt(3.4)*z", 1.0))


def test_sine_stages_are_recorded(sine):
    _, res = sine
    assert set(res.stages) == {"refit", "extensions", "implied", "config"}
    assert cf.config_equal(cf.from_dict(res.stages["config"]), res.config)
    for e in res.stages["extensions"]:
        for p in e["paths"]:
            assert p["delta_arg"] > 0


def test_fall_through_matches_extraction():
    res = build_extended("z^2-1", Domain.disk(0, 1.6), 0.1)
    assert cf.config_equal(res.config, extract("z^2-1", 2.0))


def test_clipped_lemniscate_matches_unclipped():
    res = build_extended("z^2-1", Domain.disk(0, 1.3), 0.15)
    assert cf.config_equal(res.config, extract("z^2-1", 2.0))
    assert not res.implied_zeros and not res.implied_critical


def test_off_center_cubic_is_valid():
    res = build_extended("z^3-3*z", Domain.disk(-0.6, 1.0), 0.1)
    assert cf.validate(res.config) == []
    assert len(res.implied_zeros) == 1


def test_three_exterior_ovals_join_twice():
    t = np.linspace(math.radians(-50), math.radians(290), 60)
    ring = np.concatenate([1.4 * np.exp(1j * t), 0.6 * np.exp(1j * t[::-1])])
    res = build_extended("z^3-1", Domain.polygon(ring), 0.1)
    assert cf.validate(res.config) == []
    assert len(res.implied_critical) == 2
    assert not res.implied_zeros
    faces = res.config.children[0].member.faces
    assert len(faces) == 3

"""End-to-end criteria A1 to A7; each prints one PASS/FAIL line."""
import cmath
import json
import math
import time

import numpy as np
import pytest

from levelconf import config as cf
from levelconf import samples
from levelconf.cli import main
from levelconf.domain import Domain
from levelconf.expr import AnalyticFunction
from levelconf.extender import build_extended
from levelconf.extractor import extract
from levelconf.realizer import critical_targets, realize
from levelconf.verifier import verify_model

from conftest import random_affine, separated_poly


def report(key, ok, detail=""):
    print(f"{key} {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, detail


def composed(coeffs, a, b):
    """Ascending coefficients of p(a z + b)."""
    return list(np.poly1d(list(coeffs)[::-1])(np.poly1d([a, b])).coeffs[::-1])


def test_A1_lemniscate():
    t = time.perf_counter()
    c = extract("z^2-1", 2.0)
    took = time.perf_counter() - t
    assert c.member.is_loop and c.H == pytest.approx(2.0)
    (eight,) = c.children
    m = eight.member
    checks = [
        len(m.vertex_args) == 1,
        len(m.rotation[0]) == 4,
        abs(m.vertex_args[0] - math.pi) <= 1e-6,
        abs(m.H - 1) <= 1e-6,
        sorted(f.z for f in m.faces) == [1, 1],
        all(ch.member == cf.SinglePoint(1) for ch in eight.children),
    ]
    marks = sorted(complex(p).real for p in eight.meta["marks"].values())
    checks.append(len(marks) == 2 and np.allclose(marks, [-math.sqrt(2), math.sqrt(2)], atol=1e-6))
    checks.append(took < 10)
    report("A1", all(checks), f"{took:.2f}s")


def test_A2_affine_invariance():
    rng = np.random.default_rng(20)
    t = time.perf_counter()
    good = 0
    for i in range(20):
        coeffs, top = separated_poly(rng, 2 + i % 4)
        a, b = random_affine(rng)
        p = AnalyticFunction.from_coefficients(coeffs)
        q = AnalyticFunction.from_coefficients(composed(coeffs, a, b))
        good += cf.config_equal(extract(p, 1.5 * top), extract(q, 1.5 * top))
    took = time.perf_counter() - t
    report("A2", good == 20 and took < 300, f"{good}/20 in {took:.1f}s")


def test_A3_sine_example():
    t = time.perf_counter()
    ex = samples.sine_example()
    res = build_extended(ex["h"], ex["domain"], ex["margin"], anchor=ex["anchor"])
    target = res.config
    nodes = list(target.walk())
    points = [n.member for n in nodes if isinstance(n.member, cf.SinglePoint)]
    graphs = [n.member for n in nodes if isinstance(n.member, cf.GraphMember)
              and not n.member.is_loop]
    checks = [
        len(points) == 2 and all(p.Z == 1 for p in points),
        sum(p.implied for p in points) == 1,
        len(graphs) == 1 and len(graphs[0].vertex_args) == 1,
        all(graphs[0].implied_vertices),
        len(res.implied_zeros) == 1 and len(res.implied_critical) == 1,
    ]
    q = realize(target, seed=0)
    checks.append(q.success and len(q.coefficients) == 3)
    level = 1.5 * max(abs(v) for v, _ in critical_targets(target))
    checks.append(cf.config_equal(extract(q.polynomial, level), target))
    checks.append(cf.config_equal(extract("z^2 - sqrt(3.4)*z", level), target))
    rep = verify_model(ex["h"], ex["domain"], q.polynomial)
    checks.append(rep.max_model_error <= 1e-6 and rep.injectivity_violations == 0)
    took = time.perf_counter() - t
    checks.append(took < 300)
    report("A3", all(checks), f"q = {q.polynomial.text}, error {rep.max_model_error:.1e}, "
                              f"{took:.1f}s")


def test_A4_round_trip():
    rng = np.random.default_rng(44)
    good, failures = 0, []
    for i in range(10):
        coeffs, top = separated_poly(rng, 2 + i % 3)
        target = extract(AnalyticFunction.from_coefficients(coeffs), 1.5 * top)
        t = time.perf_counter()
        res = realize(target, seed=i)
        took = time.perf_counter() - t
        if res.success and took < 60:
            again = extract(res.polynomial, 1.5 * top)
            if cf.config_equal(again, target):
                good += 1
                continue
        failures.append(f"#{i} ({took:.0f}s): {'; '.join(res.diff) or 'no fit'}")
    for f in failures:
        print("A4 search failure", f)
    report("A4", good >= 9, f"{good}/10")


def test_A5_invariants(corpus):
    problems = {k: cf.validate(c) for k, c in corpus.items()}
    ex = samples.sine_example()
    extended = {
        "sine": build_extended(ex["h"], ex["domain"], ex["margin"], anchor=ex["anchor"]),
        "cubic": build_extended("z^3-3*z", Domain.disk(-0.6, 1.0), 0.1),
        "ovals": build_extended("z^3-1", Domain.polygon(np.concatenate([
            1.4 * np.exp(1j * np.linspace(math.radians(-50), math.radians(290), 60)),
            0.6 * np.exp(1j * np.linspace(math.radians(290), math.radians(-50), 60))])), 0.1),
    }
    windings_ok = True
    for k, res in extended.items():
        problems[k] = cf.validate(res.config)
        for e in res.stages["extensions"]:
            for p in e["paths"]:
                n = (p["delta_arg"] - p["boundary_change"]) / (2 * math.pi)
                windings_ok &= abs(n - round(n)) < 1e-6 and round(n) >= 0
                windings_ok &= round(n) == p["implied_zeros"]
        # one maximal member per face: every face carries exactly one child
        for node in res.config.walk():
            windings_ok &= len(node.children) == len(node.member.faces) \
                if isinstance(node.member, cf.GraphMember) else True
    bad = {k: v for k, v in problems.items() if v}
    report("A5", not bad and windings_ok, f"{len(problems)} configurations"
                                          + (f", failing {sorted(bad)}" if bad else ""))


def test_A6_model_ground_truth():
    rng = np.random.default_rng(606)
    t = time.perf_counter()
    errs = []
    for i in range(10):
        d = 2 + i % 3
        roots = rng.normal(size=d) + 1j * rng.normal(size=d)
        coeffs = list(np.poly(roots)[::-1])
        a = cmath.rect(rng.uniform(0.5, 2), rng.uniform(0, 2 * math.pi))
        b = complex(*rng.normal(size=2))
        f = AnalyticFunction.from_coefficients(composed(coeffs, a, b))
        centre = 0.5 * complex(*rng.normal(size=2))
        rep = verify_model(f, Domain.disk(centre, 0.5), AnalyticFunction.from_coefficients(coeffs))
        errs.append(min((float(np.abs(phi.w - (a * phi.z + b)).max()) for phi in rep.valid_phis),
                        default=math.inf))
    took = time.perf_counter() - t
    report("A6", max(errs) <= 1e-8 and took < 120, f"worst {max(errs):.1e} in {took:.1f}s")


def test_A7_determinism(tmp_path):
    dom = tmp_path / "sine.json"
    dom.write_text(json.dumps(samples.load()))
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        codes = [
            main(["--seed", "3", "extract", "--func", "z^3-3*z+1", "--level", "4",
                  "--out", str(d / "c.json")]),
            main(["--seed", "3", "extend", "--domain", str(dom), "--out", str(d / "e.json")]),
            main(["--seed", "3", "realize", "--config", str(d / "e.json"),
                  "--out", str(d / "p.json")]),
        ]
        assert codes == [0, 0, 0]
        outputs.append([(d / n).read_bytes() for n in ("c.json", "e.json", "p.json")])
    same = [x == y for x, y in zip(*outputs)]
    report("A7", all(same), "extract/extend/realize " + "/".join(map(str, same)))

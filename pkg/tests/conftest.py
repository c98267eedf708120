import cmath
import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def poly_from_roots(roots):
    """Ascending coefficients of the monic polynomial with these roots."""
    return list(np.poly(np.asarray(roots, dtype=complex))[::-1])


def separated_poly(rng, degree, *, gap=0.15, tries=500):
    """Random monic polynomial with distinct critical-value moduli."""
    for _ in range(tries):
        roots = rng.normal(size=degree) + 1j * rng.normal(size=degree)
        c = np.poly(roots)
        crit = np.roots(np.polyder(c))
        vals = sorted(abs(np.polyval(c, crit)))
        if degree < 2 or (min(vals) > gap and all(b - a > gap * max(1, b) for a, b in zip(vals, vals[1:]))):
            return list(c[::-1]), max(vals, default=1.0)
    raise RuntimeError("no separated polynomial found")


def random_affine(rng):
    a = cmath.rect(rng.uniform(0.5, 2.0), rng.uniform(0, 2 * math.pi))
    b = complex(rng.normal(), rng.normal())
    return a, b


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corpus():
    """Extracted configurations: named examples plus seeded random polynomials."""
    from levelconf.expr import AnalyticFunction
    from levelconf.extractor import extract

    out = {
        "z^3": extract("z^3", 1.0),
        "z^2-1@2": extract("z^2-1", 2.0),
        "z^2-1@1.5": extract("z^2-1", 1.5),
        "model@1": extract("z^2 - sqrt(3.4)*z", 1.0),
        "z^3-3z@3": extract("z^3-3*z", 3.0),
        "z^3-3z+1@4": extract("z^3-3*z+1", 4.0),
        "(z^2-1)^2@2": extract("(z^2-1)^2", 2.0),
        "z^4-1@2": extract("z^4-1", 2.0),
    }
    rng = np.random.default_rng(2024)
    for i in range(16):
        c, m = separated_poly(rng, 2 + i % 4)
        out[f"random{i}"] = extract(AnalyticFunction.from_coefficients(c), 1.5 * m)
    return out


# ---------------------------------------------------------------- acceptance report

_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_A"):
        return
    key = name[5:].split("_")[0]
    if report.when == "call" or report.outcome != "passed":
        ok = report.outcome == "passed" and _CRITERIA.get(key, "PASS") == "PASS"
        _CRITERIA[key] = "PASS" if ok else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        terminalreporter.write_line(f"{key}: {_CRITERIA[key]}")

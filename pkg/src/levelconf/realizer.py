"""Find a polynomial whose critical level-curve configuration matches a target.

The search runs over monic centered polynomials parametrized by their
critical points ``c_j`` (with the multiplicities the target prescribes) and
a constant term.  Critical values ``p(c_j)`` are driven to the values the
target implies: ``H * exp(i a(x))`` at each graph vertex, ``0`` at each
multiple zero.  Candidates are accepted only after re-extraction agrees
with the target exactly.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from . import config as cf
from .expr import AnalyticFunction, poly_text
from .extractor import ExtractionError, extract
from .roots import RootError
from .tracer import TraceError

DEGREE_CAP = 6
FIT_TOL = 1e-11


class RealizationError(RuntimeError):
    pass


@dataclass
class RealizationResult:
    coefficients: list  # ascending, monic, centered
    achieved_config: cf.Configuration | None
    residual: float
    attempts: int
    success: bool
    canonical_angle: float = 0.0
    diff: list = field(default_factory=list)

    @property
    def polynomial(self) -> AnalyticFunction:
        return AnalyticFunction.from_coefficients(self.coefficients)

    def to_dict(self) -> dict:
        return {
            "coefficients": [[c.real, c.imag] for c in map(complex, self.coefficients)],
            "degree": len(self.coefficients) - 1,
            "expression": poly_text(self.coefficients),
            "residual": self.residual,
            "attempts": self.attempts,
            "success": self.success,
            "canonical_angle": self.canonical_angle,
            "diff": self.diff,
        }


def critical_targets(config: cf.Configuration):
    """(value, multiplicity) pairs: one per vertex and per multiple zero."""
    out = []
    for node in config.walk():
        m = node.member
        if isinstance(m, cf.SinglePoint):
            if m.Z > 1:
                out.append((0j, m.Z - 1))
        elif not m.is_loop:
            for v, a in enumerate(m.vertex_args):
                k = len(m.rotation[v]) // 2 - 1
                out.append((m.H * cmath.exp(1j * a), k))
    return out


def normalize(coeffs):
    """Monic centered representative of ``p(a z + b)``; returns (coeffs, angle).

    The remaining freedom ``z -> w z`` with ``w**n = 1`` is fixed by making
    the arguments of the lower coefficients lexicographically smallest.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    n = len(c) - 1
    if n < 1:
        raise ValueError("degree must be at least 1")
    lam = c[-1] ** (-1.0 / n)
    c = c * lam ** np.arange(n + 1)
    # shift by the mean root
    shift = -c[n - 1] / n
    P = np.poly1d(c[::-1])
    c = np.asarray(P(np.poly1d([1, shift])).coeffs[::-1], dtype=complex)
    c[-1] = 1.0
    c[n - 1] = 0.0
    best = None
    for k in range(n):
        w = cmath.exp(2j * math.pi * k / n)
        cand = c * w ** np.arange(n + 1)
        cand[n] = 1.0
        key = tuple(_arg_key(cand[j]) for j in range(n - 2, -1, -1))
        if best is None or key < best[0]:
            best = (key, cand, (cmath.phase(lam) + 2 * math.pi * k / n) % (2 * math.pi))
    out = best[1]
    tiny = 1e-14 * max(1.0, float(np.abs(out).max()))
    out = np.where(np.abs(out.real) < tiny, 0, out.real) + 1j * np.where(np.abs(out.imag) < tiny, 0, out.imag)
    return [complex(x) for x in out], best[2]


def _arg_key(x):
    if abs(x) < 1e-12:
        return (1, 0)
    return (0, round((cmath.phase(x) % (2 * math.pi)) / 1e-9))


def _poly_from(crit, mults, const, n):
    roots = np.repeat(np.asarray(crit, dtype=complex), np.asarray(mults, dtype=int))
    dp = n * np.poly(roots).astype(complex) if len(roots) else np.array([n], dtype=complex)
    p = np.polyint(dp)
    p[-1] = const
    return p  # descending


def _unpack(x, mults):
    d = len(mults)
    z = x[0::2] + 1j * x[1::2]
    free = z[:d - 1]
    last = -np.dot(mults[:d - 1], free) / mults[d - 1]
    return np.append(free, last), z[d - 1]


def _residuals(x, mults, values, n, scale):
    crit, const = _unpack(x, mults)
    p = _poly_from(crit, mults, const, n)
    r = (np.polyval(p, crit) - values) / scale
    return np.concatenate([r.real, r.imag])


def fit_critical_values(values, mults, n, rng, *, init_radius=1.0):
    values = np.asarray(values, dtype=complex)
    mults = np.asarray(mults, dtype=float)
    d = len(mults)
    scale = max(1.0, float(np.abs(values).max()))
    r = init_radius * np.sqrt(rng.uniform(size=d)) * np.exp(2j * math.pi * rng.uniform(size=d))
    const = np.mean(values) + 0.1 * (rng.normal() + 1j * rng.normal())
    z0 = np.append(r[:d - 1], const)
    x0 = np.column_stack([z0.real, z0.imag]).ravel()
    sol = least_squares(_residuals, x0, args=(mults, values, n, scale), method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
    x, fun = _polish(sol.x, sol.fun, (mults, values, n, scale))
    crit, const = _unpack(x, mults)
    return _poly_from(crit, mults, const, n)[::-1], float(np.abs(fun).max())


def _polish(x, fun, args, steps=6):
    # LM can stall a few digits short near multiple zeros; a few
    # Gauss-Newton steps finish the job when the Jacobian is regular
    for _ in range(steps):
        eps = 1e-7 * np.maximum(1.0, np.abs(x))
        J = np.column_stack([(_residuals(x + e, *args) - _residuals(x - e, *args)) / (2 * e[i])
                             for i, e in enumerate(np.diag(eps))])
        dx = np.linalg.lstsq(J, -fun, rcond=None)[0]
        xn = x + dx
        fn = _residuals(xn, *args)
        if np.abs(fn).max() >= np.abs(fun).max():
            break
        x, fun = xn, fn
    return x, fun


def realize(target: cf.Configuration, seed: int = 0, max_restarts: int = 200,
            degree_cap: int = DEGREE_CAP) -> RealizationResult:
    problems = cf.validate(target)
    if problems:
        raise RealizationError("invalid target: " + "; ".join(problems[:5]))
    n = cf.total_degree(target)
    if n > degree_cap:
        raise RealizationError(f"degree {n} exceeds cap {degree_cap}")
    core = cf._strip_boundary(target)
    if isinstance(core.member, cf.SinglePoint):
        coeffs = [0j] * n + [1 + 0j]
        got = extract(AnalyticFunction.from_coefficients(coeffs), 1.0)
        return RealizationResult(coeffs, got, 0.0, 0, cf.config_equal(got, target))
    targets = critical_targets(core)
    values = [v for v, _ in targets]
    mults = [k for _, k in targets]
    if sum(mults) != n - 1:
        raise RealizationError(f"critical multiplicities sum to {sum(mults)}, expected {n - 1}")
    want = cf.canonical_form(target)
    hmax = max(abs(v) for v in values)
    rng = np.random.default_rng(seed)
    seen = []
    best = None
    for attempt in range(1, max_restarts + 1):
        radius = hmax ** (1.0 / n) * rng.uniform(0.5, 1.5)
        coeffs, res = fit_critical_values(values, mults, n, rng, init_radius=radius)
        if res > FIT_TOL:
            if best is None or res < best[1]:
                best = (coeffs, res, None)
            continue
        coeffs, angle = normalize(coeffs)
        if any(np.allclose(coeffs, s, atol=1e-8) for s in seen):
            continue
        seen.append(coeffs)
        try:
            got = extract(AnalyticFunction.from_coefficients(coeffs), 1.5 * hmax)
        except (ExtractionError, TraceError, RootError):
            continue
        if cf.canonical_form(got) == want:
            return RealizationResult(coeffs, got, res, attempt, True, angle)
        if best is None or best[2] is None or res < best[1]:
            best = (coeffs, res, got)
    coeffs, res, got = best if best else ([], math.inf, None)
    diff = []
    if got is not None:
        diff = [f"target:   {want.decode()}", f"achieved: {cf.canonical_form(got).decode()}"]
    return RealizationResult(list(coeffs), got, res, max_restarts, False, 0.0, diff)

"""Numerical check that ``f = p o phi`` with ``phi`` injective analytic on a domain.

``phi`` is built by continuation over a grid: at each node it is the root
of ``p(w) = f(z)`` nearest the first-order prediction from an already
solved neighbour.  Every candidate starting branch is tried.  A branch is
accepted when the branch choice is consistent across all grid edges and the
image of the domain boundary is a simple closed curve.  For an analytic map
that last condition is equivalent to injectivity.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from shapely.geometry import LineString

from . import config as cf
from .domain import Domain
from .expr import as_function

MODEL_TOL = 1e-6
GRID = 96
# irrational offsets keep grid nodes off symmetric special points
_SHIFT = (0.2718281828, 0.5772156649)


@dataclass
class Cell:
    id: int
    nodes: np.ndarray  # flat grid indices
    band: tuple  # (r1, r2)
    sector: tuple  # observed arg extent in (0, 2pi)
    sheet_ratio: float  # image area with multiplicity / polar rectangle area

    @property
    def injective(self) -> bool:
        return self.sheet_ratio < 1.25


@dataclass
class PhiSamples:
    z: np.ndarray
    w: np.ndarray
    edges: np.ndarray
    branch: int
    boundary_z: np.ndarray
    boundary_w: np.ndarray


@dataclass
class ModelReport:
    max_model_error: float
    injectivity_violations: int
    samples: int
    cell_count: int
    boundary_continuity_error: float
    cr_residual: float = 0.0
    valid_branches: int = 0
    model_tol: float = MODEL_TOL
    cells_failing: list = field(default_factory=list)
    phi: PhiSamples | None = None
    valid_phis: list = field(default_factory=list)

    @property
    def success(self) -> bool:
        return (self.max_model_error <= self.model_tol and self.injectivity_violations == 0
                and self.boundary_continuity_error <= self.model_tol)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "max_model_error": self.max_model_error,
            "injectivity_violations": self.injectivity_violations,
            "samples": self.samples,
            "cell_count": self.cell_count,
            "boundary_continuity_error": self.boundary_continuity_error,
            "cr_residual": float(self.cr_residual),
            "valid_branches": self.valid_branches,
            "model_tol": self.model_tol,
            "cells_failing": self.cells_failing,
        }


def _grid(domain: Domain, n: int):
    x0, x1, y0, y1 = domain.bbox
    hx, hy = (x1 - x0) / n, (y1 - y0) / n
    xs = x0 + hx * (np.arange(n) + _SHIFT[0])
    ys = y0 + hy * (np.arange(n) + _SHIFT[1])
    Z = xs[None, :] + 1j * ys[:, None]
    inside = domain.contains(Z)
    idx = -np.ones(Z.shape, dtype=int)
    idx[inside] = np.arange(int(inside.sum()))
    pts = Z[inside]
    edges = []
    for a, b in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
        ok = (a >= 0) & (b >= 0)
        edges.append(np.column_stack([a[ok], b[ok]]))
    return pts, np.concatenate(edges)


def decompose(f, domain: Domain, config: cf.Configuration | None = None, *,
              levels=None, grid: int = GRID) -> list[Cell]:
    """Cells of the domain cut along member levels and along ``arg f = 0``."""
    f = as_function(f)
    if levels is None:
        levels = sorted({n.H for n in config.walk() if n.H > 0}) if config is not None else []
    levels = np.asarray(sorted(levels), dtype=float)
    z, edges = _grid(domain, grid)
    v = f(z)
    r = np.abs(v)
    th = np.angle(v) % (2 * math.pi)
    band = np.searchsorted(levels, r)
    a, b = edges[:, 0], edges[:, 1]
    step = np.angle(v[b] / v[a])
    # edges near a zero turn too fast to follow (|f'/f| times edge length); cut them too
    x0, x1, y0, y1 = domain.bbox
    dz = max(x1 - x0, y1 - y0) / grid
    dfz = f.derivative()(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        turn = np.where(np.abs(v) > 0, np.abs(dfz / v), np.inf) * dz
    coarse = np.maximum(turn[a], turn[b]) > 0.5
    wraps = (th[a] + step < 0) | (th[a] + step >= 2 * math.pi) | coarse
    keep = (band[a] == band[b]) & ~wraps
    n = len(z)
    adj = coo_matrix((np.ones(int(keep.sum())), (a[keep], b[keep])), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    dA = (x1 - x0) * (y1 - y0) / grid**2
    cells = []
    bounds = np.concatenate([[0.0], levels, [np.inf]])
    for k in range(ncomp):
        nodes = np.nonzero(labels == k)[0]
        if len(nodes) < 4:
            continue
        bi = int(band[nodes[0]])
        r1 = bounds[bi]
        r2 = bounds[bi + 1] if np.isfinite(bounds[bi + 1]) else float(r[nodes].max())
        r1 = max(r1, float(r[nodes].min()))
        r2 = min(r2, float(r[nodes].max()))
        t1, t2 = float(th[nodes].min()), float(th[nodes].max())
        image = float(np.sum(np.abs(dfz[nodes]) ** 2) * dA)
        rect = 0.5 * (t2 - t1) * (r2**2 - r1**2)
        ratio = image / rect if rect > 0 else 0.0
        cells.append(Cell(len(cells), nodes, (r1, r2), (t1, t2), ratio))
    return cells


def _poly_roots(coeffs, values):
    """All roots of ``p(w) = v`` for each value, shape (len(values), n)."""
    c = np.asarray(coeffs, dtype=complex)[::-1].copy()
    n = len(c) - 1
    comp = np.zeros((len(values), n, n), dtype=complex)
    lead = c[0]
    for k in range(len(values)):
        cc = c.copy()
        cc[-1] -= values[k]
        cc = cc / lead
        comp[k, 0, :] = -cc[1:]
        if n > 1:
            comp[k, 1:, :-1] = np.eye(n - 1)
    return np.linalg.eigvals(comp)


def _polish(p, dp, w, target, steps=3):
    for _ in range(steps):
        d = dp(w)
        ok = d != 0
        w = np.where(ok, w - (p(w) - target) / np.where(ok, d, 1), w)
    return w


def _continue(roots, z, fz, dfz, p, dp, edges, start, branch):
    n = len(z)
    nbrs = [[] for _ in range(n)]
    for a, b in edges:
        nbrs[a].append(b)
        nbrs[b].append(a)
    choice = -np.ones(n, dtype=int)
    w = np.zeros(n, dtype=complex)
    choice[start] = branch
    w[start] = roots[start, branch]
    queue = deque([start])
    while queue:
        a = queue.popleft()
        slope = dfz[a] / dp(w[a]) if dp(w[a]) != 0 else 0.0
        for b in nbrs[a]:
            if choice[b] >= 0:
                continue
            pred = w[a] + slope * (z[b] - z[a])
            k = int(np.argmin(np.abs(roots[b] - pred)))
            choice[b] = k
            w[b] = roots[b, k]
            queue.append(b)
    return choice, w


def _edge_mismatch(roots, z, dfz, w, choice, dp, edges):
    a, b = edges[:, 0], edges[:, 1]
    worst = 0.0
    for s, t in ((a, b), (b, a)):
        d = dp(w[s])
        slope = np.where(d != 0, dfz[s] / np.where(d != 0, d, 1), 0)
        pred = w[s] + slope * (z[t] - z[s])
        k = np.argmin(np.abs(roots[t] - pred[:, None]), axis=1)
        bad = k != choice[t]
        if bad.any():
            alt = roots[t, k]
            worst = max(worst, float(np.abs(alt - w[t])[bad].max()))
    return worst


def _boundary_image(f, p, dp, domain, z, w, step):
    bz = domain.dense_boundary(step)
    j = int(np.argmin(np.abs(z - bz[0])))
    df = f.derivative()
    prev_z, prev_w = z[j], w[j]
    out = np.zeros(len(bz), dtype=complex)
    fb = f(bz)
    rts = _poly_roots(p.coefficients, fb)
    for i, q in enumerate(bz):
        d = dp(prev_w)
        slope = df(prev_z) / d if d != 0 else 0.0
        pred = prev_w + slope * (q - prev_z)
        k = int(np.argmin(np.abs(rts[i] - pred)))
        out[i] = rts[i, k]
        prev_z, prev_w = q, out[i]
    return bz, _polish(p, dp, out, fb)


def build_phi(f, p, domain: Domain, *, grid: int = GRID, branch: int | None = None):
    """All continuation branches as ``PhiSamples`` plus their diagnostics."""
    f, p = as_function(f), as_function(p)
    if not p.is_polynomial:
        raise ValueError("model must be a polynomial")
    dp = p.derivative()
    z, edges = _grid(domain, grid)
    if len(z) == 0:
        raise ValueError("domain grid is empty")
    fz, dfz = f(z), f.derivative()(z)
    roots = _poly_roots(p.coefficients, fz)
    roots = _polish(p, dp, roots, fz[:, None])
    centre = np.mean(z)
    start = int(np.argmin(np.abs(z - centre)))
    order = np.lexsort((roots[start].imag, roots[start].real))
    branches = [branch] if branch is not None else list(order)
    x0, x1, y0, y1 = domain.bbox
    h = max(x1 - x0, y1 - y0) / grid
    out = []
    for br in branches:
        choice, w = _continue(roots, z, fz, dfz, p, dp, edges, start, int(br))
        mismatch = _edge_mismatch(roots, z, dfz, w, choice, dp, edges)
        bz, bw = _boundary_image(f, p, dp, domain, z, w, 0.25 * h)
        out.append((PhiSamples(z, w, edges, int(br), bz, bw), mismatch))
    return out


def _self_intersections(ring: np.ndarray) -> int:
    line = LineString(np.column_stack([ring.real, ring.imag]))
    if line.is_simple:
        return 0
    inter = line.intersection(line)
    # a non-simple ring: count pieces beyond the trivial one as a measure
    return max(1, len(getattr(inter, "geoms", [inter])) - 1)


def _cr_residual(f, p, dp, z, w, rng, count=200, delta=1e-5):
    idx = rng.choice(len(z), size=min(count, len(z)), replace=False)
    worst = 0.0
    for j in idx:
        vals = {}
        for name, dz in (("x+", delta), ("x-", -delta), ("y+", 1j * delta), ("y-", -1j * delta)):
            target = f(z[j] + dz)
            d = dp(w[j])
            guess = w[j] + (f.derivative()(z[j]) / d if d != 0 else 0) * dz
            vals[name] = _polish(p, dp, np.array([guess]), target, steps=6)[0]
        phx = (vals["x+"] - vals["x-"]) / (2 * delta)
        phy = (vals["y+"] - vals["y-"]) / (2 * delta)
        if abs(phx) > 0:
            worst = max(worst, abs(phy - 1j * phx) / abs(phx))
    return worst


def verify_model(f, domain: Domain, p, *, config: cf.Configuration | None = None,
                 grid: int = GRID, model_tol: float = MODEL_TOL, seed: int = 0) -> ModelReport:
    f, p = as_function(f), as_function(p)
    dp = p.derivative()
    candidates = build_phi(f, p, domain, grid=grid)
    scored = []
    for phi, mismatch in candidates:
        ring = np.append(phi.boundary_w, phi.boundary_w[0])
        closure = abs(phi.boundary_w[-1] - phi.boundary_w[0])
        step = np.abs(np.diff(phi.boundary_w)).max() if len(phi.boundary_w) > 1 else 0.0
        closed_ok = closure <= 4 * step + 1e-12
        tree = cKDTree(np.column_stack([phi.w.real, phi.w.imag]))
        pairs = tree.query_pairs(1e-9, output_type="ndarray")
        close = int(np.sum(np.abs(phi.z[pairs[:, 0]] - phi.z[pairs[:, 1]]) > 1e-9)) if len(pairs) else 0
        crossings = _self_intersections(ring) if closed_ok else 1
        violations = close + crossings
        err = float(np.abs(f(phi.z) - p(phi.w)).max())
        berr = float(np.abs(f(phi.boundary_z) - p(phi.boundary_w)).max())
        cont = mismatch if closed_ok else max(mismatch, closure)
        scored.append((violations, cont, max(err, berr), phi))
    valid = [s for s in scored if s[0] == 0 and s[1] <= model_tol]
    best = min(valid or scored, key=lambda s: (s[0], s[1], s[2]))
    violations, cont, err, phi = best
    cells = decompose(f, domain, config, grid=grid) if config is not None else \
        decompose(f, domain, levels=_critical_levels(f, p), grid=grid)
    rng = np.random.default_rng(seed)
    cr = _cr_residual(f, p, dp, phi.z, phi.w, rng)
    return ModelReport(err, violations, int(len(phi.z) + len(phi.boundary_z)), len(cells), cont,
                       cr, len(valid), model_tol,
                       [c.id for c in cells if not c.injective], phi, [s[3] for s in valid])


def _critical_levels(f, p):
    c = np.asarray(p.coefficients, dtype=complex)
    if len(c) < 3:
        return []
    crit = np.roots(np.polyder(c[::-1]))
    return sorted({float(abs(p(z))) for z in crit if abs(p(z)) > 0})

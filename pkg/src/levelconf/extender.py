"""Extend the level curves of an analytic function out of a domain.

The boundary of the refitted domain ``D2`` alternates level and gradient
segments, so the combinatorics of ``{|h| < t}`` only change at the levels of
level segments and at critical values.  The construction sweeps one level
between each pair of consecutive events.  At a level ``t`` every maximal
boundary stretch below ``t`` is closed by an extension path outside ``D2``;
its argument change is the least admissible value, and the surplus over the
boundary data is the number of implied zeros in the face it cuts off.  When
several extended components merge at an event the members of the
configuration are formed: at explicit critical points inside ``D2`` the
vertex is real, otherwise an implied critical point joins the pieces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import config as cf
from .boundary import (RefitError, RefittedBoundary, Stretch, classify, neighbor, refit_domain,
                       stretches)
from .domain import Domain
from .expr import as_function
from .extractor import ExtractionError, _roots_in_box, extract
from .tracer import HitCritical, TraceError, trace_gradient

TWO_PI = 2 * math.pi
ROUND_TOL = 0.05
GRID = 500
EVENT_TOL = 1e-9
AUTO_RHO0 = 0.0137


class ExtensionError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class LevelClash(ExtensionError):
    pass


# --------------------------------------------------------------------------
# argument bookkeeping


def least_delta(a: float) -> float:
    """Least positive value congruent to ``a`` mod 2 pi and not below ``a``."""
    if a > 0:
        return float(a)
    k = math.floor(-a / TWO_PI) + 1
    return float(a + k * TWO_PI)


def implied_count(total: float) -> int:
    """Zeros implied by a face boundary with argument change ``total``."""
    n = total / TWO_PI
    k = round(n)
    if abs(n - k) > ROUND_TOL:
        raise ExtensionError("implied-zeros", f"face winding {n:.4f} is not an integer")
    if k < 0:
        raise ExtensionError("implied-zeros", f"negative face winding {n:.4f}")
    return int(k)


def compute_delta_arg(boundary_change: float, inner_zeros: int = 0) -> float:
    """Argument change assigned to an extension path.

    ``boundary_change`` is the arg change of ``h`` along the boundary
    stretch it closes; ``inner_zeros`` counts implied zeros already placed
    behind nested paths.
    """
    return least_delta(boundary_change + TWO_PI * inner_zeros)


def marks_in(a0: float, delta: float) -> int:
    """Multiples of 2 pi strictly inside ``(a0, a0 + delta)``."""
    lo = math.floor(a0 / TWO_PI + 1e-12) + 1
    hi = math.ceil((a0 + delta) / TWO_PI - 1e-12) - 1
    return max(0, hi - lo + 1)


# --------------------------------------------------------------------------
# data types


@dataclass
class ExtensionPath:
    u: complex
    v: complex
    level: float
    boundary_change: float
    delta_arg: float
    implied_zeros: int
    arg_u: float = 0.0
    polyline: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    @property
    def distinguished(self) -> int:
        return marks_in(self.arg_u, self.delta_arg)

    def to_dict(self) -> dict:
        return {"u": [self.u.real, self.u.imag], "v": [self.v.real, self.v.imag],
                "level": self.level, "boundary_change": self.boundary_change,
                "delta_arg": self.delta_arg, "implied_zeros": self.implied_zeros,
                "distinguished": self.distinguished,
                "polyline": [[p.real, p.imag] for p in self.polyline]}


@dataclass
class FullExtension:
    level: float
    zeros: list  # explicit zero locations inside the base component
    paths: list
    explicit_zeros: int
    implied_zeros: int

    @property
    def Z(self) -> int:
        return self.explicit_zeros + self.implied_zeros

    def to_dict(self) -> dict:
        return {"level": self.level, "Z": self.Z, "explicit_zeros": self.explicit_zeros,
                "implied_zeros": self.implied_zeros,
                "zeros": [[z.real, z.imag] for z in self.zeros],
                "paths": [p.to_dict() for p in self.paths]}


@dataclass
class _Comp:
    label: int
    zeros: list  # (location, multiplicity)
    stretches: list  # (Stretch, total implied zeros behind its path)
    node: cf.Configuration | None = None
    piece: int = -1

    @property
    def Z(self) -> int:
        return sum(m for _, m in self.zeros) + sum(T for _, T in self.stretches)


@dataclass
class _State:
    level: float
    labels: np.ndarray
    comps: dict  # label -> _Comp
    stretch_comp: list  # (Stretch, T, label)


# --------------------------------------------------------------------------
# the sweep


class _Sweep:
    def __init__(self, h, bd: RefittedBoundary, grid: int = GRID):
        self.h = h
        self.bd = bd
        x0, x1 = bd.z.real.min(), bd.z.real.max()
        y0, y1 = bd.z.imag.min(), bd.z.imag.max()
        pad = 0.02 * max(x1 - x0, y1 - y0)
        self.box = (x0 - pad, x1 + pad, y0 - pad, y1 + pad)
        span = max(x1 - x0, y1 - y0) + 2 * pad
        self.dx = span / grid
        self.xs = np.arange(self.box[0], self.box[1] + self.dx, self.dx)
        self.ys = np.arange(self.box[2], self.box[3] + self.dx, self.dx)
        Zg = self.xs[None, :] + 1j * self.ys[:, None]
        self.Zg = Zg
        self.inside = bd.contains(Zg.ravel()).reshape(Zg.shape)
        self.mod = np.where(self.inside, np.abs(h(np.where(self.inside, Zg, 0))), np.inf)
        try:
            zs = _roots_in_box(h, self.box, "zero")
            cs = _roots_in_box(h, self.box, "critical")
        except ExtractionError as exc:
            raise ExtensionError("refit", str(exc))
        self.zeros = [(r.location, r.multiplicity) for r in zs if bd.contains([r.location])[0]]
        self.crits = [(r.location, r.multiplicity) for r in cs
                      if bd.contains([r.location])[0] and abs(h(r.location)) > 0]
        self.zero_nodes = [self._node(z) for z, _ in self.zeros]

    def _node(self, z):
        return (int(round((z.imag - self.box[2]) / self.dx)),
                int(round((z.real - self.box[0]) / self.dx)))

    # events -------------------------------------------------------------
    def events(self):
        lat = [(t, "boundary") for t in self.bd.levels]
        crit = sorted({round(abs(self.h(c)), 12) for c, _ in self.crits})
        for v in crit:
            for t, _ in lat:
                if abs(math.log(v / t)) < 1e-6:
                    raise LevelClash("refit", f"critical value {v:.9g} coincides with a "
                                                  "boundary level; move the lattice anchor")
        ev = sorted(lat + [(float(v), "critical") for v in crit])
        merged = []
        for t, kind in ev:
            if merged and abs(t - merged[-1][0]) <= EVENT_TOL * t:
                continue
            merged.append((t, kind))
        return merged

    def rep_levels(self, ev):
        out = []
        delta = self.bd.lattice[2] or 0.1
        out.append(ev[0][0] * math.exp(-0.5 * delta) if len(ev) else None)
        for (a, _), (b, _) in zip(ev[:-1], ev[1:]):
            out.append(math.sqrt(a * b))
        return out

    # level states --------------------------------------------------------
    def state(self, t: float) -> _State:
        mask = self.mod < t
        for (r, c) in self.zero_nodes:
            mask[r, c] = True
        labels, _ = ndimage.label(mask)
        comps = {}
        for (z, m), (r, c) in zip(self.zeros, self.zero_nodes):
            lab = int(labels[r, c])
            comps.setdefault(lab, _Comp(lab, [], [])).zeros.append((z, m))
        sc = []
        for s in stretches(self.bd, t):
            lab = self._stretch_label(s, labels, mask, t)
            comps.setdefault(lab, _Comp(lab, [], []))
            sc.append([s, 0, lab])
        return _State(t, labels, comps, sc)

    def _stretch_label(self, s: Stretch, labels, mask, t):
        n = len(self.bd.z) - 1
        ks = np.arange(math.ceil(s.start), math.floor(s.stop) + 1) % n
        if len(ks) == 0:
            ks = np.array([int(round(s.start)) % n])
        k = ks[int(np.argmin(self.bd.w.real[ks]))]
        z = self.bd.z[k]
        r, c = self._node(z)
        R = 6
        best = None
        for rr in range(max(r - R, 0), min(r + R + 1, labels.shape[0])):
            for cc in range(max(c - R, 0), min(c + R + 1, labels.shape[1])):
                if mask[rr, cc]:
                    d = abs(self.Zg[rr, cc] - z)
                    if best is None or d < best[0]:
                        best = (d, int(labels[rr, cc]))
        if best is None:
            raise ExtensionError("extension", f"no sublevel grid node next to the boundary "
                                              f"stretch at level {t:.6g}; refine the grid")
        return best[1]

    def label_of(self, st: _State, z: complex) -> int:
        r, c = self._node(z)
        if 0 <= r < st.labels.shape[0] and 0 <= c < st.labels.shape[1] and st.labels[r, c]:
            if abs(self.h(z)) < st.level:
                return int(st.labels[r, c])
        try:
            path = trace_gradient(self.h, z, "descent", st.level)
            end = path.points[-1]
        except HitCritical as exc:
            end = exc.location
        except TraceError as exc:
            raise ExtensionError("implied-critical", f"descent from {z} failed: {exc}")
        r, c = self._node(end)
        lab = int(st.labels[r, c]) if (0 <= r < st.labels.shape[0]
                                       and 0 <= c < st.labels.shape[1]) else 0
        if not lab:
            # nearest labelled node
            rr, cc = np.nonzero(st.labels)
            j = int(np.argmin(np.abs(self.Zg[rr, cc] - end)))
            lab = int(st.labels[rr[j], cc[j]])
        return lab


def _sectors(h, c: complex, mult: int, scale: float):
    """Directions of the sublevel sectors at a critical point, counterclockwise."""
    r = scale
    phi = np.linspace(0, TWO_PI, 720, endpoint=False)
    d = np.abs(h(c + r * np.exp(1j * phi))) - abs(h(c))
    neg = d < 0
    out = []
    n = len(phi)
    k0 = int(np.argmax(~neg))  # start on a superlevel sample
    k = 0
    while k < n:
        j = (k0 + k) % n
        if neg[j]:
            run = []
            while k < n and neg[(k0 + k) % n]:
                run.append((k0 + k) % n)
                k += 1
            mid = run[len(run) // 2]
            out.append(float(phi[mid]))
        else:
            k += 1
    out.sort()
    if len(out) != mult + 1:
        raise ExtensionError("extension", f"critical point {c} shows {len(out)} sublevel sectors, "
                                          f"expected {mult + 1}")
    return [c + r * np.exp(1j * p) for p in out]


# --------------------------------------------------------------------------
# member assembly


@dataclass
class _Piece:
    node: cf.Configuration
    Z: int
    touches: list = field(default_factory=list)  # vertex ids in boundary order


@dataclass
class _Vertex:
    arg: float
    pieces: list  # piece ids, counterclockwise
    implied: bool
    point: complex | None = None


def _distinct(alpha, vertices, pa, pb, delta):
    """Shift ``alpha`` off the arguments of vertices already on ``pa`` or ``pb``."""
    step = 0.125 * (delta or 0.1)
    taken = [v.arg for v in vertices if pa in v.pieces or pb in v.pieces]
    while any(abs(math.remainder(alpha - t, TWO_PI)) < 1e-9 for t in taken):
        alpha += step
    return alpha


def _assemble(H: float, pieces: list, vertices: list) -> cf.Configuration:
    args = [v.arg % TWO_PI for v in vertices]
    for i, v in enumerate(vertices):
        if cf._is_mark_arg(args[i]):
            args[i] = 0.0
    arcs, marks = [], []
    out_end, in_end = {}, {}
    arc_piece = []
    for pid, p in enumerate(pieces):
        vs = p.touches
        if not vs:
            raise ExtensionError("assemble", "piece without a vertex")
        if len(vs) != len(set(vs)):
            raise ExtensionError("assemble", "piece meets one vertex twice")
        incs = []
        for i, v in enumerate(vs[:-1]):
            d = (args[vs[i + 1]] - args[v]) % TWO_PI
            incs.append(d if d > 0 else TWO_PI)
        last = TWO_PI * p.Z - sum(incs)
        if last <= 0:
            raise ExtensionError("assemble", "argument ordering cannot be met on a face")
        incs.append(last)
        first = len(arcs)
        for i, v in enumerate(vs):
            w = vs[(i + 1) % len(vs)]
            a = len(arcs)
            arcs.append((v, w))
            marks.append(marks_in(args[v], incs[i]))
            arc_piece.append(pid)
            out_end[(v, pid)] = (a, 0)
        for i, v in enumerate(vs):
            prev = first + (i - 1) % len(vs)
            in_end[(v, pid)] = (prev, 1)
    rotation = []
    for vid, v in enumerate(vertices):
        rot = []
        for pid in v.pieces:
            rot.append(out_end[(vid, pid)])
            rot.append(in_end[(vid, pid)])
        rotation.append(rot)
    m = cf.graph_member(H, args, arcs, rotation, marks, [v.implied for v in vertices])
    children, offsets = [], []
    for fd in m.faces:
        pid = arc_piece[fd.darts[0][0]]
        children.append(pieces[pid].node)
        offsets.append(0)
    meta = {"vertices": [v.point for v in vertices], "implied": [v.implied for v in vertices]}
    return cf.Configuration(m, tuple(children), tuple(offsets), meta=meta)


# --------------------------------------------------------------------------
# public operations


def full_extension(h, bd: RefittedBoundary, seed: complex, level: float,
                   _sweep: _Sweep | None = None) -> FullExtension:
    """Full extension at ``level`` of the level curve around ``seed``."""
    h = as_function(h)
    sw = _sweep or _Sweep(h, bd)
    st = _annotate(sw, sw.state(level), None)
    lab = sw.label_of(st, seed)
    comp = st.comps.get(lab)
    if comp is None:
        raise ExtensionError("extension", f"no sublevel component at {seed}")
    return _as_extension(sw, st, comp)


def _annotate(sw: _Sweep, st: _State, lower: _State | None) -> _State:
    """Implied zeros behind every stretch path of ``st``."""
    n = len(sw.bd.z) - 1
    for item in st.stretch_comp:
        s = item[0]
        inner = 0
        if lower is not None:
            inner = sum(T for s2, T, _ in lower.stretch_comp if s.covers(s2.start, n))
        T = max(inner, implied_count(least_delta(s.delta) - s.delta))
        item[1] = T
    for comp in st.comps.values():
        comp.stretches = [(s, T) for s, T, lab in st.stretch_comp if lab == comp.label]
    return st


def _corridor(bd: RefittedBoundary, s: Stretch, dist: float) -> np.ndarray:
    n = len(bd.z) - 1
    ks = np.arange(math.ceil(s.start), math.floor(s.stop) + 1)
    pts = bd.z[ks % n]
    tang = bd.z[(ks + 1) % n] - bd.z[(ks - 1) % n]
    normal = -1j * tang / np.maximum(np.abs(tang), 1e-300)
    mid = pts + dist * normal
    return np.concatenate([[s.u], mid, [s.v]])


def _as_extension(sw: _Sweep, st: _State, comp: _Comp, rank: float = 0.5) -> FullExtension:
    dist = 0.15 * rank * sw.dx * 40
    paths = []
    for s, T in comp.stretches:
        d = s.delta + TWO_PI * T
        paths.append(ExtensionPath(s.u, s.v, st.level, s.delta, d, T, s.arg_start,
                                   _corridor(sw.bd, s, dist)))
    ex = sum(m for _, m in comp.zeros)
    return FullExtension(st.level, [z for z, _ in comp.zeros], paths, ex,
                         sum(T for _, T in comp.stretches))


@dataclass
class ExtendedResult:
    config: cf.Configuration
    boundary: RefittedBoundary
    stages: dict
    implied_zeros: list
    implied_critical: list
    extensions: list

    def to_dict(self) -> dict:
        return {"config": cf.to_dict(self.config), "stages": self.stages}


def _transition(sw: _Sweep, lower: _State, upper: _State, event: float, kind: str, log: list):
    """Carry nodes from ``lower`` to ``upper``, building members at ``event``."""
    n = len(sw.bd.z) - 1
    mapping = {}
    for lab, comp in lower.comps.items():
        rr, cc = np.nonzero(lower.labels == lab)
        if len(rr):
            ulab = int(upper.labels[rr[0], cc[0]])
        else:
            ulab = sw.label_of(upper, comp.zeros[0][0])
        mapping[lab] = ulab
    for ulab, ucomp in sorted(upper.comps.items()):
        lows = [lower.comps[lab] for lab, u in sorted(mapping.items()) if u == ulab]
        n_new = ucomp.Z - sum(c.Z for c in lows)
        if n_new < 0:
            raise ExtensionError("implied-zeros", f"component lost {-n_new} zeros at {event:.6g}")
        # newborn implied zeros, by stretch
        newborn = []
        for s, T in ucomp.stretches:
            inner = sum(T2 for s2, T2, _ in lower.stretch_comp if s.covers(s2.start, n))
            if T > inner:
                alpha = s.arg_start + 0.5 * (s.delta + TWO_PI * T)
                newborn.append((s, T - inner, alpha))
        if sum(k for _, k, _ in newborn) != n_new:
            raise ExtensionError("implied-zeros", "implied zero bookkeeping mismatch")
        pieces = []
        for c in lows:
            c.piece = len(pieces)
            pieces.append(_Piece(c.node, c.Z))
        born = []
        for s, k, alpha in newborn:
            born.append((s, len(pieces), alpha))
            pieces.append(_Piece(cf.single(k, implied=True), k))
            log.append({"event": "implied zero", "level": event, "multiplicity": k,
                        "stretch": [s.u.real, s.u.imag]})
        if len(pieces) == 1:
            ucomp.node = pieces[0].node
            continue
        ucomp.node = _merge(sw, lower, upper, event, kind, ucomp, lows, pieces, born, log)


def _merge(sw, lower, upper, event, kind, ucomp, lows, pieces, born, log):
    n = len(sw.bd.z) - 1
    parent = list(range(len(pieces)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    vertices = []
    by_label = {c.label: c.piece for c in lows}
    if kind == "critical":
        for c, m in sw.crits:
            if abs(abs(sw.h(c)) - event) > 1e-7 * event:
                continue
            if sw.label_of(upper, c) != ucomp.label:
                continue
            pts = _sectors(sw.h, c, m, 0.2 * sw.dx)
            pids = []
            for p in pts:
                lab = sw.label_of(lower, p)
                if lab not in by_label:
                    raise ExtensionError("extension", f"sector at {c} reaches no component")
                pids.append(by_label[lab])
            vid = len(vertices)
            vertices.append(_Vertex(float(np.angle(sw.h(c))), pids, False, c))
            for pid in pids:
                pieces[pid].touches.append(vid)
                parent[find(pid)] = find(pids[0])
            log.append({"event": "explicit critical point", "level": event,
                        "point": [c.real, c.imag], "pieces": len(pids)})
    # boundary order of pieces along each upper stretch
    for s, T in ucomp.stretches:
        items = []
        period = sw.bd.w[-1].imag - sw.bd.w[0].imag
        for s2, T2, lab in lower.stretch_comp:
            if s.covers(s2.start, n) and lab in by_label:
                k = 0 if s2.start >= s.start - 1e-9 else 1
                items.append((s2.start + k * n, by_label[lab], s2.arg_start + k * period,
                              s2.arg_stop + k * period))
        items.sort()
        for bs, pid, alpha in born:
            if bs is s:
                if not items:
                    # a fresh stretch attached to an existing component
                    lab = sw.label_of(lower, sw.bd.z[int(round(s.start)) % n])
                    if lab in by_label:
                        items.append((s.start, by_label[lab], s.arg_start, s.arg_start))
                pos = [k for k, it in enumerate(items) if it[3] <= alpha]
                at = (pos[-1] + 1) if pos else 0
                items.insert(at, (None, pid, alpha, alpha))
        last = len(items) - 1
        for j, (a, b) in enumerate(zip(items[:-1], items[1:])):
            pa, pb = a[1], b[1]
            if find(pa) == find(pb):
                continue
            # a newborn zero flanked on both sides gets two distinct vertex
            # arguments, one on each side of its own
            if a[0] is None and j == 0:
                alpha = a[2]
            elif b[0] is None and j + 1 == last:
                alpha = b[2]
            else:
                alpha = 0.5 * (a[3] + b[2])
            alpha = _distinct(alpha, vertices, pa, pb, sw.bd.lattice[2])
            vid = len(vertices)
            vertices.append(_Vertex(alpha, [pa, pb], True))
            pieces[pa].touches.append(vid)
            pieces[pb].touches.append(vid)
            parent[find(pb)] = find(pa)
            idx = [x[0] for x in (a, b) if x[0] is not None]
            near = sw.bd.z[int(round(sum(idx) / len(idx))) % n] if idx else s.u
            log.append({"event": "implied critical point", "level": event,
                        "arg": alpha % TWO_PI, "near": [near.real, near.imag]})
    roots = {find(i) for i in range(len(pieces))}
    if len(roots) != 1:
        raise ExtensionError("implied-critical", f"{len(roots)} groups of pieces at level "
                                                 f"{event:.6g} cannot be joined")
    return _assemble(event, pieces, vertices)


def build_extended(h, D: Domain, margin: float, *, anchor=None, divisions=None,
                   grid: int = GRID) -> ExtendedResult:
    """Extended configuration of ``h`` on ``D``.

    Without an explicit ``anchor`` the lattice is shifted until no critical
    value of ``h`` inside the domain lands on a boundary level.
    """
    h = as_function(h)
    if anchor is not None:
        return _build(h, D, margin, tuple(anchor), divisions, grid)
    last = None
    for k in range(4):
        try:
            return _build(h, D, margin, (AUTO_RHO0 + 0.29 * k, 0.0), divisions, grid)
        except LevelClash as exc:
            last = exc
    raise last


def _build(h, D, margin, anchor, divisions, grid) -> ExtendedResult:
    try:
        bd = refit_domain(h, D, margin, anchor=anchor, divisions=divisions)
    except RefitError as exc:
        raise ExtensionError("refit", str(exc))
    stages = {"refit": bd.to_dict()}
    if bd.single_level is not None:
        level = bd.single_level
        x0, x1 = bd.z.real.min(), bd.z.real.max()
        y0, y1 = bd.z.imag.min(), bd.z.imag.max()
        pad = 0.05 * max(x1 - x0, y1 - y0)
        box = (x0 - pad, x1 + pad, y0 - pad, y1 + pad)
        seed = complex(np.mean(D.points[:-1]))
        if not D.contains(seed):
            seed = None
        try:
            conf = extract(h, level, seed=seed, box=None if h.is_polynomial else box)
        except ExtractionError as exc:
            raise ExtensionError("extract", str(exc))
        stages["extensions"] = []
        stages["config"] = cf.to_dict(conf)
        return ExtendedResult(conf, bd, stages, [], [], [])
    sw = _Sweep(h, bd, grid)
    ev = sw.events()
    reps = sw.rep_levels(ev)
    log = []
    ext = []
    states = []
    prev = None
    for t in reps:
        st = _annotate(sw, sw.state(t), prev)
        states.append(st)
        prev = st
    first = states[0]
    for comp in first.comps.values():
        comp.node = _initial_node(comp)
    for i in range(1, len(states)):
        _transition(sw, states[i - 1], states[i], ev[i - 1][0], ev[i - 1][1], log)
    for i, st in enumerate(states):
        for comp in st.comps.values():
            ext.append(_as_extension(sw, st, comp, (i + 1) / (len(states) + 1)))
    top = states[-1]
    t_max = ev[-1][0]
    comps = list(top.comps.values())
    if not comps:
        raise ExtensionError("assemble", "no sublevel component below the top level")
    if len(comps) == 1:
        c = comps[0]
        root = cf.Configuration(cf.loop_member(t_max, c.Z), (c.node,), (0,),
                                boundary_level=t_max)
    else:
        root = _top_merge(sw, top, t_max, comps, log)
    problems = cf.validate(root)
    if problems:
        raise ExtensionError("assemble", "; ".join(problems[:5]))
    stages["extensions"] = [e.to_dict() for e in ext]
    stages["implied"] = log
    stages["config"] = cf.to_dict(root)
    zeros = [e for e in log if e["event"] == "implied zero"]
    crit = [e for e in log if e["event"] == "implied critical point"]
    return ExtendedResult(root, bd, stages, zeros, crit, ext)


def _initial_node(comp: _Comp) -> cf.Configuration:
    ex = sum(m for _, m in comp.zeros)
    if len(comp.zeros) > 1:
        raise ExtensionError("extension", "several zeros share the lowest sublevel component")
    if comp.zeros and comp.Z == ex:
        return cf.Configuration(cf.SinglePoint(ex), meta={"point": comp.zeros[0][0]})
    if not comp.zeros:
        return cf.single(comp.Z, implied=True)
    raise ExtensionError("implied-critical", "zeros and implied zeros share the lowest component")


def _top_merge(sw, top, t_max, comps, log):
    pieces, vertices = [], []
    order = sorted(comps, key=lambda c: min((s.start for s, _ in c.stretches), default=0))
    for c in order:
        pieces.append(_Piece(c.node, c.Z))
    for i in range(len(order) - 1):
        a, b = order[i], order[i + 1]
        sa = max(a.stretches, key=lambda x: x[0].start)[0]
        sb = min(b.stretches, key=lambda x: x[0].start)[0]
        alpha = _distinct(0.5 * (sa.arg_stop + sb.arg_start), vertices, i, i + 1,
                          sw.bd.lattice[2])
        vertices.append(_Vertex(alpha, [i, i + 1], True))
        pieces[i].touches.append(len(vertices) - 1)
        pieces[i + 1].touches.append(len(vertices) - 1)
        near = sw.bd.z[int(round(sa.stop)) % (len(sw.bd.z) - 1)]
        log.append({"event": "implied critical point", "level": t_max, "arg": alpha % TWO_PI,
                    "near": [near.real, near.imag]})
    root = _assemble(t_max, pieces, vertices)
    return cf.Configuration(root.member, root.children, root.offsets, boundary_level=t_max,
                            meta=root.meta)


def build_extended_config(h, D: Domain, margin: float = 0.2, **kw) -> cf.Configuration:
    return build_extended(h, D, margin, **kw).config


__all__ = ["ExtensionError", "ExtensionPath", "FullExtension", "ExtendedResult", "least_delta",
           "implied_count", "compute_delta_arg", "marks_in", "full_extension", "build_extended",
           "build_extended_config", "refit_domain", "classify", "neighbor"]

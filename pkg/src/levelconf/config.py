"""Recursive level-curve configurations: data model, validation, canonical form.

A configuration is a tree.  Each node holds one member: either a single
zero of multiplicity ``Z`` or a level graph at height ``H``.  A graph
member has one child per bounded face, and a cyclic offset that pairs the
face's distinguished points with those on the child's outer boundary.

Marks (distinguished points) are named ``("arc", a, k)`` for the k-th
interior point of arc ``a`` or ``("vertex", v)``.  Along a face boundary a
vertex mark is listed before the interior marks of the outgoing arc.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

H_QUANT = 1e-6
PCA_VERSION = 1
TWO_PI = 2 * math.pi


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SinglePoint:
    Z: int
    implied: bool = False

    @property
    def H(self) -> float:
        return 0.0


@dataclass(frozen=True)
class FaceData:
    darts: tuple  # ((arc, +1), ...) in positive order
    marks: tuple  # distinguished points in positive order from darts[0]

    @property
    def z(self) -> int:
        return len(self.marks)


@dataclass(frozen=True)
class GraphMember:
    H: float
    vertex_args: tuple
    arcs: tuple  # (tail, head), or (None, None) for a closed loop
    rotation: tuple  # per vertex, arc-ends (arc, side) counterclockwise
    arc_marks: tuple  # interior distinguished points per arc
    faces: tuple  # bounded faces
    implied_vertices: tuple = ()

    @property
    def is_loop(self) -> bool:
        return not self.vertex_args

    @property
    def Z(self) -> int:
        return sum(f.z for f in self.faces)


@dataclass(frozen=True)
class Configuration:
    member: object  # SinglePoint | GraphMember
    children: tuple = ()
    offsets: tuple = ()
    boundary_level: float | None = None
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def Z(self) -> int:
        return self.member.Z

    @property
    def H(self) -> float:
        return self.member.H

    @property
    def level(self) -> int:
        if not self.children:
            return 0
        return 1 + max(c.level for c in self.children)

    def walk(self):
        yield self
        for c in self.children:
            yield from c.walk()


# --------------------------------------------------------------------------
# combinatorics of a graph member


def next_dart(arcs, rotation, dart):
    """Successor of ``dart`` on the face to its left."""
    a, d = dart
    tail, head = arcs[a]
    if tail is None:
        return dart
    v = head if d > 0 else tail
    rot = rotation[v]
    k = rot.index((a, 1 if d > 0 else 0))
    na, ns = rot[(k - 1) % len(rot)]
    return (na, 1 if ns == 0 else -1)


def face_orbits(arcs, rotation):
    seen = set()
    orbits = []
    for a in range(len(arcs)):
        for d in (1, -1):
            if (a, d) in seen:
                continue
            orbit = []
            cur = (a, d)
            while cur not in seen:
                seen.add(cur)
                orbit.append(cur)
                cur = next_dart(arcs, rotation, cur)
            orbits.append(tuple(orbit))
    return orbits


def _is_mark_arg(x: float) -> bool:
    q = round((x % TWO_PI) / H_QUANT)
    return q == 0 or q == round(TWO_PI / H_QUANT)


def dart_visits(member: GraphMember, dart):
    """Mark visits along a dart in travel order."""
    a, d = dart
    tail, head = member.arcs[a]
    out = []
    start = tail if d > 0 else head
    if start is not None and _is_mark_arg(member.vertex_args[start]):
        out.append(("vertex", start))
    ks = range(member.arc_marks[a])
    out.extend(("arc", a, k) for k in (ks if d > 0 else reversed(ks)))
    return out


def face_visits(member: GraphMember, darts):
    keys, marks = [], []
    for dart in darts:
        for j, m in enumerate(dart_visits(member, dart)):
            keys.append((dart, j))
            marks.append(m)
    return keys, marks


def outer_visits(member: GraphMember, start_arc: int = 0):
    """Marks on the outer boundary, counterclockwise, with visit keys."""
    if member.is_loop:
        ks = list(range(member.arc_marks[0]))
        return [((0, k),) for k in ks], [("arc", 0, k) for k in ks]
    walk = []
    cur = (start_arc, -1)
    while True:
        walk.append(cur)
        cur = next_dart(member.arcs, member.rotation, cur)
        if cur == (start_arc, -1):
            break
    keys, marks = face_visits(member, walk)
    return keys[::-1], marks[::-1]


def make_faces(arcs, rotation, arc_marks, vertex_args) -> tuple:
    """Bounded faces (forward-dart orbits) with their derived marks."""
    tmp = GraphMember(0.0, tuple(vertex_args), tuple(arcs), tuple(rotation), tuple(arc_marks), ())
    faces = []
    if tmp.is_loop:
        darts = ((0, 1),)
        faces.append(FaceData(darts, tuple(face_visits(tmp, darts)[1])))
        return tuple(faces)
    for orb in face_orbits(arcs, rotation):
        if all(d > 0 for _, d in orb):
            i = min(range(len(orb)), key=lambda j: orb[j][0])
            darts = orb[i:] + orb[:i]
            faces.append(FaceData(darts, tuple(face_visits(tmp, darts)[1])))
    faces.sort(key=lambda f: f.darts[0][0])
    return tuple(faces)


# --------------------------------------------------------------------------
# validation


def validate(config: Configuration, _path: str = "root") -> list[str]:
    """Rule violations, each prefixed by rule name and location."""
    out: list[str] = []
    m = config.member
    if isinstance(m, SinglePoint):
        if m.Z < 1:
            out.append(f"single point multiplicity: {_path} has Z={m.Z}")
        if config.children:
            out.append(f"single point children: {_path} has children")
        return out
    if not isinstance(m, GraphMember):
        return [f"member type: {_path} is {type(m).__name__}"]
    if not (m.H > 0 and math.isfinite(m.H)):
        out.append(f"level positive: {_path} has H={m.H}")
    if m.is_loop:
        if len(m.arcs) != 1 or m.arcs[0] != (None, None):
            out.append(f"loop shape: {_path} vertex-free member must be one closed arc")
    else:
        out.extend(_validate_graph(m, _path))
    for i, f in enumerate(m.faces):
        if f.z < 1:
            out.append(f"face zero count: {_path} face {i} has z=0")
    if len(config.children) != len(m.faces):
        out.append(f"children per face: {_path} has {len(config.children)} children "
                   f"for {len(m.faces)} faces")
        return out
    if len(config.offsets) != len(m.faces):
        out.append(f"gradient maps: {_path} offsets do not match faces")
        return out
    for i, (f, c, off) in enumerate(zip(m.faces, config.children, config.offsets)):
        p = f"{_path}/face{i}"
        if c.Z != f.z:
            out.append(f"child degree: {p} child Z={c.Z} but z(D)={f.z}")
        if isinstance(c.member, GraphMember) and not c.H < m.H:
            out.append(f"H monotonicity: {p} child H={c.H} not below {m.H}")
        if not (isinstance(off, int) and 0 <= off < max(f.z, 1)):
            out.append(f"gradient maps: {p} offset {off} out of range")
        out.extend(validate(c, p))
    if config.children and not any(c.level == config.level - 1 for c in config.children):
        out.append(f"child depth: {_path} has no child one level down")
    return out


def _validate_graph(m: GraphMember, path: str) -> list[str]:
    out = []
    nv, na = len(m.vertex_args), len(m.arcs)
    if len(m.rotation) != nv:
        return [f"rotation system: {path} rotation has {len(m.rotation)} entries for {nv} vertices"]
    if len(m.arc_marks) != na:
        return [f"arc marks: {path} has {len(m.arc_marks)} counts for {na} arcs"]
    ends = []
    for v, rot in enumerate(m.rotation):
        deg = len(rot)
        if deg < 4 or deg % 2:
            out.append(f"vertex degree: {path} vertex {v} has degree {deg}")
        for a, s in rot:
            if not (0 <= a < na) or m.arcs[a][s] != v:
                out.append(f"rotation system: {path} vertex {v} lists foreign end {(a, s)}")
            ends.append((a, s))
    if sorted(ends) != sorted((a, s) for a in range(na) for s in (0, 1)):
        out.append(f"rotation system: {path} arc ends are not listed exactly once")
        return out
    for v, x in enumerate(m.vertex_args):
        if not 0 <= x < TWO_PI + H_QUANT:
            out.append(f"vertex arg range: {path} vertex {v} has arg {x}")
    orbits = face_orbits(m.arcs, m.rotation)
    backward = [o for o in orbits if all(d < 0 for _, d in o)]
    mixed = [o for o in orbits if len({d for _, d in o}) > 1]
    if mixed or len(backward) != 1:
        out.append(f"unbounded face incidence: {path} some edge misses the unbounded face")
    if nv - na + len(orbits) != 2:
        out.append(f"euler: {path} V-E+F={nv - na + len(orbits)}")
    derived = make_faces(m.arcs, m.rotation, m.arc_marks, m.vertex_args)
    if sorted(derived, key=repr) != sorted(m.faces, key=repr):
        out.append(f"distinguished points: {path} face marks disagree with arcs and vertex args")
    for i, f in enumerate(m.faces):
        out.extend(_check_ordering(m, f, f"{path} face {i}"))
    return out


def _check_ordering(m: GraphMember, f: FaceData, where: str) -> list[str]:
    # sequence of (vertex, marks passed since previous vertex)
    seq = []
    for a, _ in f.darts:
        tail = m.arcs[a][0]
        seq.append((tail, m.arc_marks[a]))
    out = set()
    n = len(seq)
    args = m.vertex_args
    for i in range(n):
        x1 = seq[i][0]
        passed = 0
        for j in range(1, n):
            passed += seq[(i + j - 1) % n][1]
            x2 = seq[(i + j) % n][0]
            x2_mark = int(_is_mark_arg(args[x2]))
            if x2 != x1 and args[x1] >= args[x2] and passed + x2_mark == 0:
                out.add(f"argument ordering: {where} vertices {x1},{x2} lack a distinguished point")
            passed += x2_mark
    return sorted(out)


# --------------------------------------------------------------------------
# canonical form


def _q(x: float) -> int:
    return int(round(x / H_QUANT))


def _qarg(x: float) -> int:
    q = _q(x % TWO_PI)
    return 0 if q == _q(TWO_PI) else q


def _hvalue(h: float, ranks):
    return ranks[_q(h)] if ranks is not None else _q(h)


def _canon(config: Configuration, ranks):
    """(code, [(outer base index in stored order, ...)] for optimal roots)."""
    m = config.member
    if isinstance(m, SinglePoint):
        return ("zero", m.Z), [0]
    if m.is_loop:
        return _canon_loop(config, ranks)
    kids = [_canon(c, ranks) for c in config.children]
    best = None
    bases = []
    _, stored_outer = outer_visits(m, 0)
    stored_outer_keys = outer_visits(m, 0)[0]
    for a in range(len(m.arcs)):
        for s in (0, 1):
            code, alabel = _root_code(m, config, kids, (a, s), ranks)
            if best is None or code < best:
                best, bases = code, []
            if code == best:
                keys = outer_visits(m, a)[0]
                bases.append(stored_outer_keys.index(keys[0]) if keys else 0)
    return best, sorted(set(bases))


def _canon_loop(config, ranks):
    m = config.member
    z = m.arc_marks[0]
    if config.children:
        ccode, cbases = _canon(config.children[0], ranks)
        off = config.offsets[0]
        # rotating the loop's start does not change the pairing up to relabeling
        offs = min((r + off - b) % z for r in range(z) for b in cbases)
    else:
        ccode, offs = None, 0
    return ("loop", _hvalue(m.H, ranks), z, ccode, offs), list(range(z))


def _root_code(m: GraphMember, config, kids, root, ranks):
    a0, s0 = root
    v0 = m.arcs[a0][s0]
    vlabel = {v0: 0}
    alabel: dict[int, int] = {}
    entry = {v0: root}
    order = [v0]
    qi = 0
    while qi < len(order):
        v = order[qi]
        qi += 1
        rot = m.rotation[v]
        k = rot.index(entry[v])
        for a, s in rot[k:] + rot[:k]:
            if a not in alabel:
                alabel[a] = len(alabel)
            other = m.arcs[a][1 - s]
            if other not in vlabel:
                vlabel[other] = len(vlabel)
                entry[other] = (a, 1 - s)
                order.append(other)
    vcode = tuple(
        (_qarg(m.vertex_args[v]),
         tuple((alabel[a], s) for a, s in _rotate(m.rotation[v], entry[v])))
        for v in order)
    inv_a = sorted(alabel, key=alabel.get)
    acode = tuple((vlabel[m.arcs[a][0]], vlabel[m.arcs[a][1]], m.arc_marks[a]) for a in inv_a)
    fcodes = []
    for fi, f in enumerate(m.faces):
        i = min(range(len(f.darts)), key=lambda j: alabel[f.darts[j][0]])
        darts = f.darts[i:] + f.darts[:i]
        stored_keys, _ = face_visits(m, f.darts)
        keys, _ = face_visits(m, darts)
        s = stored_keys.index(keys[0]) if keys else 0
        ccode, cbases = kids[fi]
        z = max(f.z, 1)
        off = min((s + config.offsets[fi] - b) % z for b in cbases)
        fcodes.append((tuple(alabel[a] for a, _ in darts), ccode, off))
    fcodes.sort()
    return ("graph", _hvalue(m.H, ranks), vcode, acode, tuple(fcodes)), alabel


def _rotate(seq, first):
    k = seq.index(first)
    return tuple(seq[k:]) + tuple(seq[:k])


def _strip_boundary(config: Configuration) -> Configuration:
    m = config.member
    if isinstance(m, GraphMember) and m.is_loop and config.children:
        return config.children[0]
    return config


def canonical_code(config: Configuration, *, ordinal_h: bool = False, include_boundary: bool = False):
    c = config if include_boundary else _strip_boundary(config)
    ranks = None
    if ordinal_h:
        hs = sorted({_q(n.H) for n in c.walk()})
        ranks = {h: i for i, h in enumerate(hs)}
    return _canon(c, ranks)[0]


def canonical_form(config: Configuration, *, ordinal_h: bool = False,
                   include_boundary: bool = False) -> bytes:
    """Relabeling-invariant encoding; reflection changes it.

    A vertex-free loop at the root is the region boundary rather than a
    critical member, so it is left out unless ``include_boundary`` is set.
    """
    problems = validate(config)
    if problems:
        raise ConfigError("invalid configuration: " + "; ".join(problems[:5]))
    code = canonical_code(config, ordinal_h=ordinal_h, include_boundary=include_boundary)
    return json.dumps(code, separators=(",", ":")).encode()


def config_equal(c1: Configuration, c2: Configuration, *, ordinal_h: bool = False) -> bool:
    return canonical_form(c1, ordinal_h=ordinal_h) == canonical_form(c2, ordinal_h=ordinal_h)


def total_degree(config: Configuration) -> int:
    return config.Z


# --------------------------------------------------------------------------
# construction helpers


def graph_member(H, vertex_args, arcs, rotation, arc_marks, implied_vertices=()) -> GraphMember:
    arcs = tuple(tuple(a) for a in arcs)
    rotation = tuple(tuple(tuple(e) for e in r) for r in rotation)
    vertex_args = tuple(float(x) % TWO_PI for x in vertex_args)
    faces = make_faces(arcs, rotation, tuple(arc_marks), vertex_args)
    return GraphMember(float(H), vertex_args, arcs, rotation, tuple(int(k) for k in arc_marks),
                       faces, tuple(bool(b) for b in implied_vertices))


def loop_member(H, marks: int) -> GraphMember:
    return graph_member(H, (), ((None, None),), (), (marks,))


def single(Z: int, implied: bool = False) -> Configuration:
    return Configuration(SinglePoint(int(Z), implied))


def relabel(config: Configuration, vperm=None, aperm=None, rng=None) -> Configuration:
    """Same configuration under renamed vertices and arcs (for testing)."""
    return _relabel(config, vperm, aperm, rng)[0]


def _outer_shift(old: Configuration, new: Configuration, aperm) -> int:
    """Index in the old outer walk of the new walk's first visit."""
    if aperm is None or not isinstance(old.member, GraphMember) or old.member.is_loop:
        return 0
    old_keys = [((aperm[a], d), j) for (a, d), j in outer_visits(old.member, 0)[0]]
    new_keys = outer_visits(new.member, 0)[0]
    return old_keys.index(new_keys[0]) if new_keys else 0


def _relabel(config, vperm, aperm, rng):
    m = config.member
    if not isinstance(m, GraphMember) or m.is_loop:
        kids = [_relabel(c, None, None, rng) for c in config.children]
        offs = [(o - _outer_shift(c, k, p)) % max(m.faces[i].z, 1) if isinstance(m, GraphMember) else o
                for i, (c, (k, p), o) in enumerate(zip(config.children, kids, config.offsets))]
        return replace(config, children=tuple(k for k, _ in kids), offsets=tuple(offs)), None
    nv, na = len(m.vertex_args), len(m.arcs)
    if rng is not None:
        vperm = list(rng.permutation(nv))
        aperm = list(rng.permutation(na))
    vperm = list(vperm if vperm is not None else range(nv))
    aperm = list(aperm if aperm is not None else range(na))
    args = [0.0] * nv
    imp = [False] * nv
    rot = [None] * nv
    for v in range(nv):
        args[vperm[v]] = m.vertex_args[v]
        if m.implied_vertices:
            imp[vperm[v]] = m.implied_vertices[v]
        r = [(aperm[a], s) for a, s in m.rotation[v]]
        k = 0 if rng is None else int(rng.integers(len(r)))
        rot[vperm[v]] = tuple(r[k:] + r[:k])
    arcs = [None] * na
    marks = [0] * na
    for a in range(na):
        t, h = m.arcs[a]
        arcs[aperm[a]] = (vperm[t], vperm[h])
        marks[aperm[a]] = m.arc_marks[a]
    new = graph_member(m.H, args, arcs, rot, marks, imp if m.implied_vertices else ())
    # carry children and offsets across to the relabeled faces
    old_keys = {}
    for i, f in enumerate(m.faces):
        old_keys[frozenset(aperm[a] for a, _ in f.darts)] = i
    children, offsets = [], []
    for nf in new.faces:
        i = old_keys[frozenset(a for a, _ in nf.darts)]
        of = m.faces[i]
        mapped = [_map_mark(x, vperm, aperm) for x in of.marks]
        shift = mapped.index(nf.marks[0]) if nf.marks else 0
        kid, kperm = _relabel(config.children[i], None, None, rng)
        t = _outer_shift(config.children[i], kid, kperm)
        children.append(kid)
        offsets.append((config.offsets[i] + shift - t) % max(nf.z, 1))
    return replace(config, member=new, children=tuple(children), offsets=tuple(offsets)), aperm


def _map_mark(x, vperm, aperm):
    if x[0] == "vertex":
        return ("vertex", vperm[x[1]])
    return ("arc", aperm[x[1]], x[2])


def reflect(config: Configuration) -> Configuration:
    """Mirror image: reversed rotations and arcs, negated vertex args."""
    m = config.member
    if isinstance(m, SinglePoint):
        return config
    kids = [reflect(c) for c in config.children]
    if m.is_loop:
        return replace(config, children=tuple(kids))
    arcs = [(h, t) for t, h in m.arcs]
    rot = [tuple((a, 1 - s) for a, s in reversed(r)) for r in m.rotation]
    new = graph_member(m.H, [-x for x in m.vertex_args], arcs, rot, m.arc_marks,
                       m.implied_vertices)

    def flip(x):
        return x if x[0] == "vertex" else ("arc", x[1], m.arc_marks[x[1]] - 1 - x[2])

    by_arcs = {frozenset(a for a, _ in f.darts): i for i, f in enumerate(m.faces)}
    children, offsets = [], []
    for nf in new.faces:
        i = by_arcs[frozenset(a for a, _ in nf.darts)]
        of, child, nchild = m.faces[i], config.children[i], kids[i]
        z = of.z
        if isinstance(child.member, SinglePoint):
            children.append(nchild)
            offsets.append(0)
            continue
        # old pairing: face mark k -> child outer mark k + off
        old_outer = _outer_marks(child)
        new_outer = _outer_marks(nchild)
        k = list(map(flip, of.marks)).index(nf.marks[0])
        y = old_outer[(k + config.offsets[i]) % z]
        y_new = new_outer.index(_flip_child_mark(child, y))
        children.append(nchild)
        offsets.append(y_new % z)
    return replace(config, member=new, children=tuple(children), offsets=tuple(offsets))


def _outer_marks(config: Configuration):
    m = config.member
    if isinstance(m, SinglePoint):
        return [("zero", k) for k in range(m.Z)]
    return outer_visits(m, 0)[1]


def _flip_child_mark(config, y):
    m = config.member
    if isinstance(m, SinglePoint) or y[0] != "arc":
        return y
    return ("arc", y[1], m.arc_marks[y[1]] - 1 - y[2])


# --------------------------------------------------------------------------
# JSON


def _mark_json(x):
    return list(x)


def _mark_from(x):
    return ("vertex", int(x[1])) if x[0] == "vertex" else ("arc", int(x[1]), int(x[2]))


def to_dict(config: Configuration) -> dict:
    m = config.member
    if isinstance(m, SinglePoint):
        d = {"kind": "zero", "Z": m.Z}
        if m.implied:
            d["implied"] = True
        return d
    d = {
        "kind": "graph",
        "H": m.H,
        "vertices": [{"id": v, "arg": x, **({"implied": True} if m.implied_vertices and
                                             m.implied_vertices[v] else {})}
                     for v, x in enumerate(m.vertex_args)],
        "arcs": [{"id": a, "ends": [] if e[0] is None else list(e), "marks": m.arc_marks[a]}
                 for a, e in enumerate(m.arcs)],
        "rotation": {str(v): [list(e) for e in r] for v, r in enumerate(m.rotation)},
        "faces": [],
    }
    for f, c, off in zip(m.faces, config.children, config.offsets):
        d["faces"].append({"arcs": [a for a, _ in f.darts], "z": f.z,
                           "distinguished": [_mark_json(x) for x in f.marks],
                           "child": to_dict(c), "gradient_offset": off})
    return d


def from_dict(d: dict) -> Configuration:
    kind = d.get("kind")
    if kind == "zero":
        return single(int(d["Z"]), bool(d.get("implied", False)))
    if kind != "graph":
        raise ConfigError(f"unknown member kind {kind!r}")
    verts = sorted(d["vertices"], key=lambda v: v["id"])
    arcs_in = sorted(d["arcs"], key=lambda a: a["id"])
    arcs = [tuple(a["ends"]) if a["ends"] else (None, None) for a in arcs_in]
    rot = [tuple(tuple(e) for e in d["rotation"][str(v["id"])]) for v in verts]
    implied = [bool(v.get("implied", False)) for v in verts]
    m = graph_member(d["H"], [v["arg"] for v in verts], arcs, rot,
                     [int(a.get("marks", 0)) for a in arcs_in],
                     implied if any(implied) else ())
    faces_in = {tuple(f["arcs"]): f for f in d["faces"]}
    children, offsets = [], []
    for f in m.faces:
        key = tuple(a for a, _ in f.darts)
        fd = faces_in.get(key)
        if fd is None:
            for k, v in faces_in.items():
                if set(k) == set(key):
                    fd = v
        if fd is None:
            raise ConfigError(f"face {key} missing from JSON")
        stored = [_mark_from(x) for x in fd["distinguished"]]
        shift = stored.index(f.marks[0]) if f.marks and f.marks[0] in stored else 0
        if int(fd["z"]) != f.z:
            raise ConfigError(f"face {key}: z={fd['z']} but {f.z} distinguished points")
        children.append(from_dict(fd["child"]))
        offsets.append((int(fd["gradient_offset"]) + shift) % max(f.z, 1))
    return Configuration(m, tuple(children), tuple(offsets))


def to_json(config: Configuration, **extra) -> str:
    d = {"pca_version": PCA_VERSION}
    if config.boundary_level is not None:
        d["boundary_level"] = config.boundary_level
    d.update(extra)
    d["config"] = to_dict(config)
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def from_json(text: str) -> Configuration:
    d = json.loads(text)
    if d.get("pca_version") != PCA_VERSION:
        raise ConfigError(f"unsupported pca_version {d.get('pca_version')!r}")
    c = from_dict(d["config"])
    return replace(c, boundary_level=d.get("boundary_level"))

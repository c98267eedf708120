"""Command-line entry point: ``levelconf <subcommand> ...``.

Exit status is 0 on success, 1 on domain or numerical errors (including a
failed verification or an invalid configuration) and 2 on usage errors.
Relative output paths resolve against ``$LEVELCONF_OUTPUT_DIR`` when set.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import config as cf
from .domain import Domain, DomainError
from .expr import AnalyticFunction, ExpressionError
from .extender import ExtensionError, build_extended
from .extractor import ExtractionError, extract
from .realizer import RealizationError, realize
from .render import RenderSpec, scene_from_config, scene_from_stages, to_svg
from .roots import RootError
from .tracer import TraceError
from .verifier import GRID, MODEL_TOL, verify_model

OUTPUT_ENV = "LEVELCONF_OUTPUT_DIR"
STAGES = ("refit", "extensions", "implied", "config")

DomainFailure = (DomainError, ExpressionError, ExtractionError, ExtensionError, RealizationError,
                 RootError, TraceError, cf.ConfigError, ValueError, ArithmeticError, OSError,
                 KeyError)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def out_path(name: str | None, default: str) -> Path | None:
    if name == "-":
        return None
    p = Path(name or default)
    base = os.environ.get(OUTPUT_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _write(name, default, text):
    p = out_path(name, default)
    if p is None:
        sys.stdout.write(text)
        return
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)


def _read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _pair(text, name):
    try:
        parts = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name} must be comma-separated numbers")
    return parts


def _complex(text):
    x = _pair(text, "point")
    if len(x) != 2:
        raise argparse.ArgumentTypeError("point must be x,y")
    return complex(*x)


def _box(text):
    x = _pair(text, "box")
    if len(x) != 4:
        raise argparse.ArgumentTypeError("box must be xmin,xmax,ymin,ymax")
    return tuple(x)


def _anchor(text):
    x = _pair(text, "anchor")
    if len(x) != 2:
        raise argparse.ArgumentTypeError("anchor must be rho,theta")
    return tuple(x)


# --------------------------------------------------------------------------
# subcommands


def cmd_extract(a) -> int:
    f = AnalyticFunction.parse(a.func)
    c = extract(f, a.level, seed=a.seed_point, box=a.box)
    extra = {"func": f.text, "level": a.level}
    if a.box is not None:
        extra["box"] = list(a.box)
    _write(a.out, "config.json", cf.to_json(c, **extra))
    return 0


def _domain_file(path):
    d = _read_json(path)
    return Domain.from_dict(d), d


def cmd_extend(a) -> int:
    D, raw = _domain_file(a.domain)
    func = a.func or raw.get("func")
    if not func:
        raise DomainError("no function given (use --func or a 'func' field in the domain file)")
    h = AnalyticFunction.parse(func)
    margin = a.margin if a.margin is not None else float(raw.get("margin", 0.2))
    anchor = a.anchor or (tuple(raw["anchor"]) if "anchor" in raw else None)
    res = build_extended(h, D, margin, anchor=anchor, divisions=a.divisions)
    extra = {"func": h.text, "margin": margin, "stages": res.stages}
    if res.boundary.single_level is not None:
        extra["level"] = res.boundary.single_level
    text = cf.to_json(res.config, **extra)
    _write(a.out, "extended.json", text)
    wanted = STAGES if "all" in a.dump_stage else a.dump_stage
    stem = Path(a.out).stem if a.out and a.out != "-" else "extended"
    for name in wanted:
        _write(str(Path(a.dump_dir or ".") / f"{stem}.{name}.json"), "", _dumps(res.stages.get(name)))
    return 0


def cmd_realize(a) -> int:
    target = cf.from_json(Path(a.config).read_text())
    res = realize(target, seed=a.seed, max_restarts=a.max_restarts, degree_cap=a.degree_cap)
    d = res.to_dict()
    # exact decimals: repr of a float round-trips bit for bit
    d["decimals"] = [[repr(c.real), repr(c.imag)] for c in map(complex, res.coefficients)]
    d["seed"] = a.seed
    _write(a.out, "poly.json", _dumps(d))
    if not res.success:
        for line in res.diff:
            print(line, file=sys.stderr)
        print("realization search failed", file=sys.stderr)
        return 1
    return 0


def load_poly(path) -> AnalyticFunction:
    d = _read_json(path)
    if "decimals" in d:
        coeffs = [complex(float(x), float(y)) for x, y in d["decimals"]]
    elif "coefficients" in d:
        coeffs = [complex(*c) if isinstance(c, list) else complex(c) for c in d["coefficients"]]
    elif "expression" in d:
        return AnalyticFunction.parse(d["expression"])
    else:
        raise DomainError("polynomial file has no coefficients")
    return AnalyticFunction.from_coefficients(coeffs)


def cmd_verify(a) -> int:
    D, raw = _domain_file(a.domain)
    func = a.func or raw.get("func")
    if not func:
        raise DomainError("no function given")
    f = AnalyticFunction.parse(func)
    p = load_poly(a.poly)
    rep = verify_model(f, D, p, grid=a.grid, model_tol=a.model_tol, seed=a.seed)
    _write(a.report, "report.json", _dumps(rep.to_dict()))
    if not rep.success:
        print(f"model check failed: error {rep.max_model_error:.3g}, "
              f"{rep.injectivity_violations} injectivity violations", file=sys.stderr)
        return 1
    return 0


def cmd_render(a) -> int:
    d = _read_json(a.config)
    conf = cf.from_dict(d["config"]) if "config" in d else None
    f = AnalyticFunction.parse(d["func"]) if "func" in d else None
    base = None
    if f is not None and "level" in d:
        box = tuple(d["box"]) if "box" in d else None
        if box is None and not f.is_polynomial and "stages" in d:
            pts = [p for s in d["stages"]["refit"]["segments"] for p in s["polyline"]]
            xs, ys = [p[0] for p in pts], [p[1] for p in pts]
            pad = 0.05 * max(max(xs) - min(xs), max(ys) - min(ys))
            box = (min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad)
        base = scene_from_config(extract(f, d["level"], box=box), f)
    if "stages" in d:
        scene = scene_from_stages(d["stages"], base)
    elif base is not None:
        scene = base
    elif conf is not None:
        scene = scene_from_config(conf)
    else:
        raise DomainError("nothing to render")
    layers = tuple(a.layers.split(",")) if a.layers else RenderSpec().layers
    spec = RenderSpec(a.width, a.height, a.viewport, layers)
    _write(a.svg, "out.svg", to_svg(scene, spec))
    return 0


def cmd_validate(a) -> int:
    conf = cf.from_json(Path(a.config).read_text())
    problems = cf.validate(conf)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 1
    print("valid")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levelconf",
                                 description="Critical level-curve configurations.")
    ap.add_argument("--seed", type=int, default=0, help="seed for every stochastic stage")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="configuration of f on {|f| < level}")
    p.add_argument("--func", required=True)
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--seed-point", type=_complex, default=None, help="x,y inside the region")
    p.add_argument("--box", type=_box, default=None, help="search box for entire functions")
    p.add_argument("--out")
    p.set_defaults(run=cmd_extract)

    p = sub.add_parser("extend", help="extended configuration of h on a domain")
    p.add_argument("--func")
    p.add_argument("--domain", required=True, help='JSON {"domain": [[x, y], ...]}')
    p.add_argument("--margin", type=float, default=None)
    p.add_argument("--anchor", type=_anchor, default=None, help="lattice anchor rho,theta")
    p.add_argument("--divisions", type=int, default=None)
    p.add_argument("--dump-stage", action="append", default=[],
                   choices=STAGES + ("all",))
    p.add_argument("--dump-dir", default=None)
    p.add_argument("--out")
    p.set_defaults(run=cmd_extend)

    p = sub.add_parser("realize", help="polynomial with a target configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--max-restarts", type=int, default=200)
    p.add_argument("--degree-cap", type=int, default=6)
    p.add_argument("--out")
    p.set_defaults(run=cmd_realize)

    p = sub.add_parser("verify", help="check f = p o phi on a domain")
    p.add_argument("--func")
    p.add_argument("--domain", required=True)
    p.add_argument("--poly", required=True)
    p.add_argument("--grid", type=int, default=GRID)
    p.add_argument("--model-tol", type=float, default=MODEL_TOL)
    p.add_argument("--report")
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("render", help="SVG of a configuration or extension")
    p.add_argument("--config", required=True)
    p.add_argument("--svg")
    p.add_argument("--width", type=int, default=800)
    p.add_argument("--height", type=int, default=800)
    p.add_argument("--viewport", type=_box, default=None)
    p.add_argument("--layers", default=None, help="comma-separated layer names")
    p.set_defaults(run=cmd_render)

    p = sub.add_parser("validate", help="check configuration invariants")
    p.add_argument("--config", required=True)
    p.set_defaults(run=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    # allow --seed after the subcommand as well
    argv = list(sys.argv[1:] if argv is None else argv)
    if "--seed" in argv[1:]:
        i = argv.index("--seed", 1)
        if i + 1 < len(argv):
            argv = argv[i:i + 2] + argv[:i] + argv[i + 2:]
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return a.run(a)
    except DomainFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

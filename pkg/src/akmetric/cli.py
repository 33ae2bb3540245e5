"""Command-line front end (``akmetric``)."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import catalog
from . import generator as gen
from . import geometry as geo
from .errors import InputError, NumericalError
from .manifest import load_manifest, save_manifest
from .verify import RunOptions, run_verify

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def load_source(src: str):
    """A manifest path or ``catalog:<id>`` (generator names are accepted too)."""
    if src.startswith("catalog:"):
        return catalog.resolve(src[len("catalog:"):])
    try:
        with open(src, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {src}: {exc.strerror}") from None
    return load_manifest(data)


def _jsonable(arr):
    a = np.asarray(arr)
    if np.iscomplexobj(a):
        if np.all(a.imag == 0):
            a = a.real
        else:
            return np.stack([a.real, a.imag], axis=-1).tolist()
    return a.tolist()


def _write(path, data: bytes):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def cmd_verify(args):
    man = load_source(args.manifest)
    opts = RunOptions(points=args.points, seed=args.seed, tol=args.tol,
                      gamma_override=args.gamma, format=args.format)
    report = run_verify(man, opts)
    text = report.to_json() if opts.format == "json" else report.to_text()
    sys.stdout.write(text)
    if args.output:
        _write(args.output, report.to_json().encode())
    return report.exit_code()


def _parse_point(text, man):
    try:
        vals = [complex(t.strip().replace("i", "j")) for t in text.split(",")]
    except ValueError:
        raise InputError(f"bad point {text!r}") from None
    if len(vals) != man.dim:
        raise InputError(f"point has {len(vals)} coordinates, {man.name} needs {man.dim}")
    if not man.is_complex:
        if any(v.imag for v in vals):
            raise InputError("real manifest needs a real point")
        return np.array([v.real for v in vals])
    return np.array(vals)


def cmd_curvature(args):
    man = load_source(args.manifest)
    point = _parse_point(args.point, man)
    c = geo.curvature_at(man, point)
    out = {"manifest": man.name, "point": _jsonable(point), "g": _jsonable(c.g),
           "christoffel": _jsonable(c.gamma), "riemann": _jsonable(c.riemann),
           "ricci": _jsonable(c.ricci), "scalar": _jsonable(c.scalar)}
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_transform(args):
    man = load_source(args.manifest)
    if args.command == "complexify":
        res = gen.complexify(man, analytic_continuation=args.continuation)
    elif args.command == "realify":
        res = gen.realify(man)
    else:
        res = gen.twin(man)
    _write(args.output, save_manifest(res))
    return EXIT_OK


def cmd_tower(args):
    man = load_source(args.manifest)
    levels = gen.tower(man, args.levels)
    os.makedirs(args.output, exist_ok=True)
    for lv in levels[1:]:
        path = os.path.join(args.output, f"level{lv.level}.json")
        _write(path, save_manifest(lv.manifest))
        print(f"{path}  dim={lv.dim}")
    return EXIT_OK


def cmd_catalog(args):
    if args.action == "list":
        out = [{"id": e.id, "params": e.params, "description": e.description}
               for e in catalog.ENTRIES.values()]
        sys.stdout.write(json.dumps(out, indent=2) + "\n")
        return EXIT_OK
    if not args.id:
        raise InputError("catalog show needs an id")
    man = catalog.catalog_get(args.id)
    sys.stdout.write(save_manifest(man).decode())
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="akmetric", description="anti-Kaehler metric checks")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run the applicable checks on a manifest")
    v.add_argument("manifest")
    v.add_argument("--points", type=int, default=64)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--gamma", type=float, default=None, help="override expected gamma")
    v.add_argument("--format", choices=("json", "text"), default="json")
    v.add_argument("-o", "--output", help="also write the JSON report here")
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("curvature", help="print g, Christoffel, Riemann, Ricci at a point")
    c.add_argument("manifest")
    c.add_argument("--point", required=True, help="comma separated coordinates")
    c.set_defaults(func=cmd_curvature)

    for name in ("complexify", "realify", "twin"):
        t = sub.add_parser(name)
        t.add_argument("manifest")
        t.add_argument("-o", "--output", required=True)
        if name == "complexify":
            t.add_argument("--continuation", action="store_true",
                           help="rewrite re/im into analytic form first")
        t.set_defaults(func=cmd_transform)

    tw = sub.add_parser("tower", help="write tower levels 1..k")
    tw.add_argument("manifest")
    tw.add_argument("--levels", type=int, required=True)
    tw.add_argument("-o", "--output", required=True)
    tw.set_defaults(func=cmd_tower)

    cat = sub.add_parser("catalog")
    cat.add_argument("action", choices=("list", "show"))
    cat.add_argument("id", nargs="?")
    cat.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Verbs:
  run       execute an experiment config (or rerun a manifest)
  validate  check a config and print diagnostics without running it
  render    turn a saved pattern grid into a PPM image
  distance  print the pattern distance between two saved grids

Exit codes: 0 success, 1 validation failure, 2 runtime failure.
Worker count comes from --workers or the BOHMQUBITS_WORKERS variable.
"""

import argparse
import json
import sys

from .errors import BohmError, ConfigError
from .parallel import apply_workers


class _Parser(argparse.ArgumentParser):
    # bad usage is a validation failure, not a runtime one
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bohmqubits",
                description="entangled two-qubit Bohmian trajectory "
                            "experiments")
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", help="config JSON or manifest.json")
    run.add_argument("--out", default=None,
                     help="override the output directory")
    run.add_argument("--workers", type=int, default=None,
                     help="thread count for batch kernels")

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("config", help="config JSON or manifest.json")

    ren = sub.add_parser("render", help="render a .pgrid dump to PPM")
    ren.add_argument("pattern", help="pattern grid dump (.pgrid)")
    ren.add_argument("-o", "--output", default=None,
                     help="output image path (default: input + .ppm)")
    ren.add_argument("--scale", choices=("log", "linear"), default="log")

    dist = sub.add_parser("distance",
                          help="distance between two .pgrid dumps")
    dist.add_argument("pattern_a")
    dist.add_argument("pattern_b")
    dist.add_argument("--normalization",
                      choices=("unit_frobenius", "unit_mass"),
                      default="unit_frobenius")
    return p


def _cmd_run(args) -> int:
    from . import experiments
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    diags = experiments.validate(raw)
    for d in diags:
        print(f"{d['level']}: {d['message']}", file=sys.stderr)
    if any(d["level"] == "error" for d in diags):
        return 1
    try:
        apply_workers(args.workers)
        manifest = experiments.run(raw, output_dir=args.out)
    except BohmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    outdir = manifest["config"]["output_dir"]
    print(f"{manifest['experiment']}: wrote "
          f"{len(manifest['artifacts'])} artifacts to {outdir} "
          f"({manifest['wall_time_s']} s)")
    return 0


def _cmd_validate(args) -> int:
    from . import experiments
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}")
        return 1
    diags = experiments.validate(raw)
    for d in diags:
        print(f"{d['level']}: {d['message']}")
    if any(d["level"] == "error" for d in diags):
        return 1
    print("ok")
    return 0


def _cmd_render(args) -> int:
    from . import patterns
    try:
        grid = patterns.load_pattern(args.pattern)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load pattern: {exc}", file=sys.stderr)
        return 1
    out = args.output or args.pattern + ".ppm"
    try:
        patterns.render(grid, out, scale=args.scale)
    except (OSError, BohmError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


def _cmd_distance(args) -> int:
    from . import patterns
    try:
        a = patterns.load_pattern(args.pattern_a)
        b = patterns.load_pattern(args.pattern_b)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load pattern: {exc}", file=sys.stderr)
        return 1
    try:
        d = patterns.frobenius_distance(a, b,
                                        normalization=args.normalization)
    except BohmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(repr(d.value))
    return 0


_COMMANDS = {"run": _cmd_run, "validate": _cmd_validate,
             "render": _cmd_render, "distance": _cmd_distance}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.verb](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BohmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

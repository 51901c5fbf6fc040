"""Command-line entry point: ``lightfront run | validate | list-scenarios``."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import scenario as sc_mod

OUT_ENV = "LIGHTFRONT_OUT"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("lightfront")


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _positive_float(text):
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def build_parser():
    p = argparse.ArgumentParser(prog="lightfront", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or re-run a manifest.json")
    r.add_argument("file", help="scenario .cfg, bundled scenario name, or manifest.json")
    r.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV}/<name> or ./out/<name>)")
    r.add_argument("--threads", type=_positive_int, default=None,
                   help="worker threads for plasma families and kappa scans (default: serial)")
    r.add_argument("--rtol", type=_positive_float, default=None, help="override numerics.rtol")
    r.add_argument("--atol", type=_positive_float, default=None, help="override numerics.atol")
    v = sub.add_parser("validate", help="check a scenario without running it")
    v.add_argument("file")
    sub.add_parser("list-scenarios", help="list the bundled scenarios")
    return p


def _resolve(name):
    """A path, or the stem of a bundled scenario."""
    path = Path(name)
    if path.exists():
        return path
    bundled = sc_mod.SCENARIO_DIR / (name if name.endswith(".cfg") else name + ".cfg")
    if bundled.exists():
        return bundled
    raise sc_mod.ConfigError(f"{name}: no such file or bundled scenario")


def _load(name):
    path = _resolve(name)
    if path.suffix == ".json":
        return sc_mod.from_manifest(path)
    return sc_mod.load(path), None


def cmd_run(args):
    scen, threads = _load(args.file)
    threads = args.threads if args.threads is not None else threads
    scen = scen.with_overrides(rtol=args.rtol, atol=args.atol)
    if args.out_dir:
        out = Path(args.out_dir)
    else:
        out = Path(os.environ.get(OUT_ENV) or "out") / scen.name
    result = sc_mod.run(scen, out, threads)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{scen.name}: wrote {len(result.files) + 2} files to {out}")
    return EXIT_OK


def cmd_validate(args):
    scen, _ = _load(args.file)
    notes = sc_mod.validate(scen)
    for w in notes:
        print(f"warning: {w}", file=sys.stderr)
    print(f"{scen.source}: ok ({scen.kind})")
    return EXIT_OK


def cmd_list(args):
    for path in sc_mod.bundled():
        scen = sc_mod.load(path)
        desc = scen.get("scenario", "description")
        print(f"{path.stem:<22} {scen.kind:<16} {desc}")
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    handler = {"run": cmd_run, "validate": cmd_validate, "list-scenarios": cmd_list}[args.command]
    try:
        return handler(args)
    except sc_mod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except sc_mod.NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

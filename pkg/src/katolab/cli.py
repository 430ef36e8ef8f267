"""Command line entry point: ``python -m katolab <verb> <file>``."""

import argparse
import json
import sys

from .errors import KatoLabError


def main(argv=None):
    from . import experiments as ex

    p = argparse.ArgumentParser(prog="python -m katolab", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)
    s = sub.add_parser("sweep", help="run (or resume) a viscosity/seed sweep")
    s.add_argument("config")
    s.add_argument("--workers", type=int, default=None,
                   help=f"parallel cells (default: ${ex.WORKERS_ENV} or 1)")
    s.add_argument("--output", default=None, help="override [output] directory")
    s.add_argument("--fresh", action="store_true", help="ignore completed cells of an earlier run")
    for verb, text in (("stokes-slope", "fit the Stokes deviation against viscosity"),
                       ("corrector-scalings", "fit corrector norms against the strip width")):
        q = sub.add_parser(verb, help=text)
        q.add_argument("config")
        q.add_argument("--output", default=None)
    v = sub.add_parser("verify", help="recheck a finished sweep from its manifest")
    v.add_argument("manifest")
    args = p.parse_args(argv)

    try:
        if args.verb == "verify":
            return 0 if ex.verify(args.manifest)["ok"] else 1
        cfg = ex.load_config(args.config)
        if args.output:
            cfg = cfg.replace(output_dir=args.output)
        if args.verb == "sweep":
            man = ex.run_sweep(cfg, workers=args.workers, resume=not args.fresh)
            print(json.dumps({"status": man["status"], "failures": man["failures"]}, indent=2))
            return 0 if man["status"] == "complete" else 1
        if args.verb == "stokes-slope":
            ex.stokes_slope(cfg)
        else:
            ex.corrector_scalings(cfg)
        return 0
    except KatoLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

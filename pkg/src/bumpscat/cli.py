"""Command-line interface.

Exit codes: 0 on success, 1 for configuration errors, 2 for numerical
failures.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .classical import ESCAPE, SectionPoint, poincare_map
from .config import load, resolve
from .errors import BumpscatError, ConfigError


def _load_config(args):
    if getattr(args, "config", None):
        return load(args.config)
    return resolve({})


def _cmd_dimension(args):
    cfg = _load_config(args)
    path = pipeline.run_dimension(cfg, out_path=args.out)
    print(path)


def _cmd_islands(args):
    cfg = _load_config(args)
    path = pipeline.run_islands(cfg, args.k, out_path=args.out)
    print(path)


def _cmd_resonances(args):
    cfg = _load_config(args)
    hbars = [args.hbar] if args.hbar is not None else None
    Rs = [args.R] if args.R is not None else None
    path = pipeline.run_resonances(cfg, hbar_values=hbars, R_values=Rs,
                                   out_path=args.out, jobs=args.jobs)
    print(path)


def _cmd_count(args):
    cfg = _load_config(args)
    path = pipeline.run_count(cfg, args.infile, out_path=args.out,
                              E0=args.E0, E1=args.E1)
    print(path)


def _cmd_weyl_fit(args):
    cfg = _load_config(args)
    path = pipeline.run_weyl_fit(cfg, args.counts, dims_path=args.dims,
                                 out_path=args.out)
    print(path)


def _cmd_validate(args):
    cfg = _load_config(args)
    hbars = [args.hbar] if args.hbar is not None else None
    paths, summary = pipeline.run_validate(cfg, hbar_values=hbars, jobs=args.jobs)
    for p in paths:
        print(p)
    print(summary)


def _cmd_poincare_map(args):
    cfg = _load_config(args)
    scfg = pipeline.section_config(cfg)
    result = poincare_map(scfg, SectionPoint(theta=args.theta, ptheta=args.ptheta,
                                             k=args.k))
    if result == ESCAPE:
        print("ESCAPE")
    else:
        print(f"{result.theta:.17g},{result.ptheta:.17g},{result.k}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bumpscat",
        description="Resonances, trapped-set dimensions and the fractal Weyl law "
        "for gaussian-bump scattering.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dimension", help="trapped-set dimension sweep over (R, E)")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_dimension)

    p = sub.add_parser("islands", help="surviving cell centers at a bounce level")
    p.add_argument("--config")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_islands)

    p = sub.add_parser("resonances", help="eigenvalue runs over the alpha ladder")
    p.add_argument("--config")
    p.add_argument("--hbar", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_resonances)

    p = sub.add_parser("count", help="alpha-invariant box counts from res.csv")
    p.add_argument("--config")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--E0", type=float)
    p.add_argument("--E1", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("weyl-fit", help="slope of log N_res vs -log hbar per R")
    p.add_argument("--config")
    p.add_argument("--counts", required=True)
    p.add_argument("--dims")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_weyl_fit)

    p = sub.add_parser("validate-2bump", help="two-bump lattice validation")
    p.add_argument("--config")
    p.add_argument("--hbar", type=float)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("poincare-map", help="apply the section map to one point")
    p.add_argument("--config")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--ptheta", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=_cmd_poincare_map)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except BumpscatError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Run the manufactured-solution convergence study and print rates per method and degree."""

import argparse
import logging

from trefftz_stokes.analysis import eoc
from trefftz_stokes.cli import METHODS, RunConfig, cmd_convergence


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k", default="2,3,4", help="comma separated velocity degrees")
    p.add_argument("--levels", default="2,4,8,16", help="comma separated mesh resolutions")
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--out", default="convergence.csv")
    p.add_argument("-v", "--verbose", action="store_true")
    return p.parse_args()


def main():
    args = parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    config = RunConfig(
        methods=METHODS,
        ks=tuple(int(t) for t in args.k.split(",")),
        levels=tuple(int(t) for t in args.levels.split(",")),
        nu=args.nu,
        out=args.out,
    )
    results = cmd_convergence(config)
    print(f"wrote {args.out}")
    print(f"{'method':8s} {'k':>2s} {'n':>4s} {'u_l2':>11s} {'rate':>6s} {'p_l2':>11s} {'rate':>6s} {'u_1h':>11s} {'rate':>6s}")
    for method in config.methods:
        for k in config.ks:
            rows = sorted((r.report for r in results if r.report.method == method and r.report.k == k), key=lambda r: r.n)
            rates = {f: [float("nan")] + eoc([(r.h, getattr(r, f)) for r in rows]) for f in ("u_l2", "p_l2", "u_1h")}
            for i, r in enumerate(rows):
                print(
                    f"{method:8s} {k:2d} {r.n:4d} {r.u_l2:11.3e} {rates['u_l2'][i]:6.2f} "
                    f"{r.p_l2:11.3e} {rates['p_l2'][i]:6.2f} {r.u_1h:11.3e} {rates['u_1h'][i]:6.2f}"
                )


if __name__ == "__main__":
    main()

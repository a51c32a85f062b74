#!/usr/bin/env python3
"""Regenerate the four result tables (objectives, model sizes, regret vs utility gap).

Two grids are run over N = 10..15:

* the dominance fixture with the default stock table, for the capacitated and
  uncapacitated regret models (objectives and sizes);
* seeded random draws, for the uncapacitated regret model and the utility baseline
  on shared draws (objectives, gap and sizes).

CSV/JSON reports land in ``--out`` (default ``results/``).
"""
import argparse
import os
import sys

from rrmprice.harness import STOCK_TABLE, ExperimentConfig, run_experiment
from rrmprice.solver import SolveOptions


def fmt(x, nd=3):
    if x is None:
        return "-"
    return f"{x:.{nd}f}".rstrip("0").rstrip(".") if isinstance(x, float) else str(x)


def table(title, header, rows):
    print(f"\n{title}")
    widths = [max(len(str(h)), *(len(str(r[k])) for r in rows)) for k, h in enumerate(header)]
    print("  ".join(str(h).rjust(w) for h, w in zip(header, widths)))
    for r in rows:
        print("  ".join(str(c).rjust(w) for c, w in zip(r, widths)))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--counts", type=int, nargs="+", default=sorted(STOCK_TABLE))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--scenarios", type=int, default=4)
    ap.add_argument("--time-limit", type=float, default=600.0)
    ap.add_argument("--timings", action="store_true", help="include wall seconds in the reports")
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    opts = SolveOptions(time_limit_s=args.time_limit)

    dom = run_experiment(ExperimentConfig(
        args.counts, {n: STOCK_TABLE.get(n) for n in args.counts}, ["rrm-cap", "rrm-uncap"],
        [args.seed], options=opts, fixture="dominance", scenario_count=args.scenarios,
        output=os.path.join(args.out, "dominance"), timings=args.timings))
    cmp_ = run_experiment(ExperimentConfig(
        args.counts, {}, ["rrm-uncap", "rum"], [args.seed], options=opts, fixture="random",
        scenario_count=args.scenarios, output=os.path.join(args.out, "compare"), timings=args.timings))

    rows1, rows2 = [], []
    for row in dom:
        c, u = row.results["rrm-cap"], row.results["rrm-uncap"]
        rows1.append([row.n_customers, fmt(row.cap_alt2), fmt(row.cap_alt3), fmt(c.seconds, 1),
                      fmt(u.seconds, 1), fmt(c.objective), fmt(u.objective)])
        rows2.append([row.n_customers, c.constraints, u.constraints, c.variables, u.variables,
                      c.iterations, u.iterations, c.nodes, u.nodes])
    table("Capacitated vs uncapacitated objectives (dominance fixture)",
          ["N", "cap2", "cap3", "s cap", "s uncap", "obj cap", "obj uncap"], rows1)
    table("Model sizes and search effort (dominance fixture)",
          ["N", "rows cap", "rows uncap", "vars cap", "vars uncap", "iter cap", "iter uncap",
           "nodes cap", "nodes uncap"], rows2)

    rows3, rows4 = [], []
    for row in cmp_:
        u, r = row.results["rum"], row.results["rrm-uncap"]
        gap = "-" if row.gap_percent is None else str(round(row.gap_percent))
        rows3.append([row.n_customers, fmt(u.seconds, 2), fmt(r.seconds, 2), fmt(u.objective),
                      fmt(r.objective), gap])
        rows4.append([row.n_customers, u.constraints, r.constraints, u.variables, r.variables,
                      u.iterations, r.iterations])
    table("Utility vs regret objectives on shared random draws",
          ["N", "s rum", "s rrm", "obj rum", "obj rrm", "gap %"], rows3)
    table("Utility vs regret model sizes", ["N", "rows rum", "rows rrm", "vars rum", "vars rrm",
                                             "iter rum", "iter rrm"], rows4)

    failed = [(row.n_customers, k, res.status) for row in dom + cmp_ for k, res in row.results.items()
              if res.status != "optimal" or res.violations]
    for f in failed:
        print("not optimal or audit failure:", f, file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
"""Standalone MPS solver used as the external backend: ``highs_solve.py MODEL.mps SOLUTION.txt``.

Writes ``status <s>``, ``objective <v>`` and one ``<name> <value>`` line per column.
Exit status is 0 whenever a solution file was written (including infeasible).
"""
import argparse
import sys

import highspy


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("model")
    ap.add_argument("solution")
    ap.add_argument("--time-limit", type=float, default=None)
    args = ap.parse_args(argv)

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("mip_rel_gap", 0.0)
    h.setOptionValue("mip_abs_gap", 1e-9)
    if args.time_limit:
        h.setOptionValue("time_limit", args.time_limit)
    if h.readModel(args.model) != highspy.HighsStatus.kOk:
        print(f"cannot read {args.model}", file=sys.stderr)
        return 3
    h.run()
    status = h.getModelStatus()
    with open(args.solution, "w") as fh:
        if status != highspy.HighsModelStatus.kOptimal:
            fh.write("status " + h.modelStatusToString(status).replace(" ", "-").lower() + "\n")
            return 0
        lp = h.getLp()
        x = h.getSolution().col_value
        fh.write("status optimal\n")
        fh.write(f"objective {h.getInfo().objective_function_value!r}\n")
        for name, v in zip(lp.col_names_, x):
            fh.write(f"{name} {v!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line: generate | build | solve | oracle | compare | report."""
from __future__ import annotations

import argparse
import os
import sys
import warnings

from . import instance as inst_mod
from .builders import InconsistentInputsError, build_model, decode, audit_solution
from .harness import (STOCK_TABLE, ExperimentConfig, csv_text, gap_percent, make_inputs,
                      run_experiment)
from .milp import export_mps, model_counts
from .oracle import SearchSpaceTooLarge, oracle_optimize
from .solver import (ExternalExitError, ExternalSolverConfig, ExternalSpawnError,
                     NumericInstabilityError, SolutionParseError, SolveOptions, solve, solve_external)
from .stochastic import compute_er, dominance_draws, sample_draws

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def _capacity(tok: str):
    if tok.lower() in ("inf", "none", "unbounded"):
        return None
    v = int(tok)
    if v < 0:
        raise argparse.ArgumentTypeError("capacity must be >= 0")
    return v


def _instance_args(p):
    p.add_argument("--instance", help="instance JSON file (overrides the synthetic generator)")
    p.add_argument("--customers", type=int, default=10)
    p.add_argument("--capacity", type=_capacity, nargs=2, metavar=("C2", "C3"),
                   help="stock of the two paid alternatives ('inf' for unbounded)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenarios", type=int, default=inst_mod.DEFAULT_SCENARIOS)
    p.add_argument("--fixture", choices=("random", "dominance"), default="random")


def _solver_args(p):
    p.add_argument("--solver", choices=("embedded", "external"), default="embedded")
    p.add_argument("--external-cmd", help="command template with {model} and {solution}")
    p.add_argument("--time-limit", type=float, default=600.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--branch-rule", choices=("pseudo-cost", "most-fractional"), default="pseudo-cost")
    p.add_argument("--node-order", choices=("best-bound", "depth-first"), default="best-bound")


def parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="rrmprice", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic instance as JSON")
    _instance_args(g)
    g.add_argument("--out")

    b = sub.add_parser("build", help="build a model and write it as MPS")
    _instance_args(b)
    b.add_argument("--model", choices=("rrm-cap", "rrm-uncap", "rum"), default="rrm-uncap")
    b.add_argument("--out")

    s = sub.add_parser("solve", help="build and solve one model")
    _instance_args(s)
    _solver_args(s)
    s.add_argument("--model", choices=("rrm-cap", "rrm-uncap", "rum"), default="rrm-uncap")

    o = sub.add_parser("oracle", help="exhaustive optimum for a small instance")
    _instance_args(o)
    o.add_argument("--mode", choices=("cap", "uncap"), default="uncap")
    o.add_argument("--behavior", choices=("rrm", "rum"), default="rrm")

    c = sub.add_parser("compare", help="regret vs utility models on shared draws")
    _instance_args(c)
    _solver_args(c)

    r = sub.add_parser("report", help="run an experiment grid and write CSV/JSON")
    r.add_argument("--counts", type=int, nargs="+", default=sorted(STOCK_TABLE))
    r.add_argument("--models", nargs="+", choices=("rrm-cap", "rrm-uncap", "rum"),
                   default=["rrm-cap", "rrm-uncap"])
    r.add_argument("--seeds", type=int, nargs="+", default=[0])
    r.add_argument("--scenarios", type=int, default=inst_mod.DEFAULT_SCENARIOS)
    r.add_argument("--fixture", choices=("random", "dominance"), default="random")
    r.add_argument("--unbounded", action="store_true", help="ignore the default stock table")
    r.add_argument("--timings", action="store_true", help="record wall seconds (not reproducible)")
    r.add_argument("--out", required=True, help="output path prefix")
    _solver_args(r)
    return ap


def _options(args) -> SolveOptions:
    threads = int(os.environ.get("RL_THREADS", args.threads))
    return SolveOptions(time_limit_s=args.time_limit, threads=threads,
                        branch_rule=args.branch_rule, node_order=args.node_order)


def _external(args):
    if args.solver != "external":
        return None
    if not args.external_cmd:
        raise UsageError("--solver external requires --external-cmd")
    return ExternalSolverConfig(args.external_cmd)


def _inputs(args):
    if args.instance:
        with open(args.instance) as fh:
            inst = inst_mod.check(inst_mod.load(fh.read()))
        draws = sample_draws(inst)
        if args.fixture == "dominance":
            draws = dominance_draws(inst, base=draws)
        return inst, draws, compute_er(inst, draws)
    return make_inputs(args.customers, args.capacity, args.seed, args.fixture, args.scenarios)


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solve(model, args):
    ext = _external(args)
    return solve_external(model, ext, _options(args)) if ext else solve(model, _options(args))


def _fmt(x: float) -> str:
    return format(round(x, 9) + 0.0, "g")


def run(argv) -> int:
    args = parser().parse_args(argv)
    if args.cmd == "generate":
        inst = inst_mod.synth_instance(args.customers, args.capacity, args.seed, args.scenarios)
        _emit(inst_mod.save(inst), args.out)
        return EXIT_OK
    if args.cmd == "report":
        caps = {} if args.unbounded else dict(STOCK_TABLE)
        cfg = ExperimentConfig(args.counts, caps, args.models, args.seeds, args.solver, _external(args),
                               _options(args), args.fixture, args.scenarios, args.out, args.timings)
        rows = run_experiment(cfg)
        sys.stdout.write(csv_text(rows, args.timings))
        failed = any(r.status != "optimal" for row in rows for r in row.results.values())
        return EXIT_SOLVER if failed else EXIT_OK

    inst, draws, er = _inputs(args)
    if args.cmd == "build":
        if args.model == "rrm-cap" and all(inst.capacity(i) is None for i in inst.paid_ids):
            warnings.warn("capacitated model built without any bounded capacity")
        model = build_model(args.model, inst, draws, er)
        _emit(export_mps(model), args.out)
        c = model_counts(model)
        print(f"constraints {c['n_constraints']} variables {c['n_vars']} binaries {c['n_binaries']}",
              file=sys.stderr)
        return EXIT_OK
    if args.cmd == "oracle":
        value, _ = oracle_optimize(inst, draws, er, args.mode, args.behavior)
        print(f"objective {_fmt(value)}")
        return EXIT_OK
    if args.cmd == "solve":
        model = build_model(args.model, inst, draws, er)
        sol = _solve(model, args)
        print(f"status {sol.status}")
        if sol.status != "optimal":
            return EXIT_SOLVER
        out = decode(model, sol, inst)
        print(f"objective {_fmt(out.avg_revenue)}")
        viol = audit_solution(args.model, inst, draws, er, out)
        for v in viol:
            print(f"violation {v}", file=sys.stderr)
        return EXIT_OK
    if args.cmd == "compare":
        objs = {}
        for kind in ("rrm-uncap", "rum"):
            model = build_model(kind, inst, draws, er)
            sol = _solve(model, args)
            if sol.status != "optimal":
                print(f"{kind} status {sol.status}")
                return EXIT_SOLVER
            objs[kind] = decode(model, sol, inst).avg_revenue
            print(f"{kind} objective {_fmt(objs[kind])}")
        if objs["rrm-uncap"] > 0:
            print(f"gap_percent {round(gap_percent(objs['rum'], objs['rrm-uncap']))}")
        print(f"draw_digest {draws.digest()}")
        return EXIT_OK
    raise UsageError(f"unknown command {args.cmd}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(argv)
    except UsageError:
        return EXIT_USAGE
    except (inst_mod.InstanceParseError, inst_mod.InvalidInstanceError, InconsistentInputsError,
            SearchSpaceTooLarge, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ExternalSpawnError, ExternalExitError, SolutionParseError, NumericInstabilityError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())

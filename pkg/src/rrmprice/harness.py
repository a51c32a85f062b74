"""Experiment orchestration and CSV/JSON reports shaped like the published tables."""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field

from .builders import build_model, decode, audit_solution
from .instance import canonical_json, synth_instance
from .milp import model_counts
from .solver import ExternalSolverConfig, SolveOptions, solve, solve_external
from .stochastic import compute_er, dominance_draws, sample_draws

MODELS = ("rrm-cap", "rrm-uncap", "rum")
CSV_COLUMNS = ("n_customers", "cap_alt2", "cap_alt3", "model", "objective", "seconds",
               "constraints", "variables", "iterations", "nodes", "gap_percent")
# stock of the two paid alternatives per customer count
STOCK_TABLE = {10: (5, 5), 11: (5, 5), 12: (6, 6), 13: (7, 6), 14: (7, 7), 15: (8, 7)}


def gap_percent(rum_obj: float, rrm_obj: float) -> float:
    """Relative revenue shortfall of the utility-based plan, in percent of the regret-based one."""
    if not rrm_obj > 0:
        raise ValueError(f"gap undefined for non-positive reference objective {rrm_obj!r}")
    return 100.0 * (rrm_obj - rum_obj) / rrm_obj


@dataclass
class ExperimentConfig:
    customer_counts: list
    capacities: dict = field(default_factory=lambda: dict(STOCK_TABLE))
    models: list = field(default_factory=lambda: ["rrm-cap", "rrm-uncap"])
    seeds: list = field(default_factory=lambda: [0])
    solver: str = "embedded"
    external: ExternalSolverConfig | None = None
    options: SolveOptions = field(default_factory=SolveOptions)
    fixture: str = "random"          # or "dominance"
    scenario_count: int = 4
    output: str | None = None        # path prefix; writes <output>.csv and <output>.json
    timings: bool = False

    def __post_init__(self):
        if not self.customer_counts or not self.models or not self.seeds:
            raise ValueError("customer_counts, models and seeds must be nonempty")
        bad = set(self.models) - set(MODELS)
        if bad:
            raise ValueError(f"unknown models {sorted(bad)}")
        if self.fixture not in ("random", "dominance"):
            raise ValueError(f"unknown fixture {self.fixture!r}")
        if self.solver not in ("embedded", "external"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.solver == "external" and self.external is None:
            raise ValueError("external solver selected without a command")


@dataclass
class ModelResult:
    model: str
    status: str
    objective: float | None = None
    seconds: float | None = None
    constraints: int | None = None
    variables: int | None = None
    iterations: int | None = None
    nodes: int | None = None
    violations: list = field(default_factory=list)
    outcome: dict | None = None
    error: str | None = None


@dataclass
class ReportRow:
    n_customers: int
    cap_alt2: int | None
    cap_alt3: int | None
    seed: int
    instance_digest: str
    draw_digest: str
    results: dict = field(default_factory=dict)     # model -> ModelResult
    gap_percent: float | None = None


def make_inputs(n: int, capacities, seed: int, fixture: str = "random", scenario_count: int = 4):
    inst = synth_instance(n, capacities, seed=seed, scenario_count=scenario_count)
    draws = sample_draws(inst)
    if fixture == "dominance":
        draws = dominance_draws(inst, base=draws)
    return inst, draws, compute_er(inst, draws)


def run_model(kind, inst, draws, er, config: ExperimentConfig) -> ModelResult:
    try:
        model = build_model(kind, inst, draws, er)
        counts = model_counts(model)
        if config.solver == "external":
            sol = solve_external(model, config.external, config.options)
        else:
            sol = solve(model, config.options)
        res = ModelResult(kind, sol.status, constraints=counts["n_constraints"],
                          variables=counts["n_vars"], iterations=sol.stats.get("iterations"),
                          nodes=sol.stats.get("nodes"), seconds=sol.stats.get("seconds"))
        if sol.values is not None:
            out = decode(model, sol, inst)
            res.objective = out.avg_revenue if sol.status == "optimal" else sol.objective
            res.outcome = out.to_dict()
            res.violations = [str(v) for v in audit_solution(kind, inst, draws, er, out)]
        return res
    except Exception as exc:  # one failing cell must not abort the run
        return ModelResult(kind, "error", error=f"{type(exc).__name__}: {exc}")


def run_experiment(config: ExperimentConfig) -> list[ReportRow]:
    rows = []
    for n in config.customer_counts:
        caps = config.capacities.get(n) if config.capacities else None
        for seed in config.seeds:
            inst, draws, er = make_inputs(n, caps, seed, config.fixture, config.scenario_count)
            row = ReportRow(n, None if caps is None else caps[0], None if caps is None else caps[1],
                            seed, inst.digest(), draws.digest())
            for kind in config.models:
                row.results[kind] = run_model(kind, inst, draws, er, config)
            rrm = row.results.get("rrm-uncap")
            rum = row.results.get("rum")
            if rrm and rum and rrm.objective is not None and rum.objective is not None and rrm.objective > 0:
                row.gap_percent = gap_percent(rum.objective, rrm.objective)
            rows.append(row)
    if config.output:
        write_reports(rows, config)
    return rows


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(round(x, 9) + 0.0)
    return str(x)


def csv_text(rows: list[ReportRow], timings: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        gap = "" if row.gap_percent is None else str(int(round(row.gap_percent)))
        for kind, res in row.results.items():
            w.writerow([row.n_customers, _cell(row.cap_alt2), _cell(row.cap_alt3), kind,
                        _cell(res.objective), _cell(res.seconds) if timings else "",
                        _cell(res.constraints), _cell(res.variables), _cell(res.iterations),
                        _cell(res.nodes), gap])
    return buf.getvalue()


def json_text(rows: list[ReportRow], config: ExperimentConfig) -> str:
    doc = {
        "options": {**config.options.to_dict(), "solver": config.solver, "fixture": config.fixture,
                    "scenario_count": config.scenario_count},
        "rows": [],
    }
    for row in rows:
        doc["rows"].append({
            "n_customers": row.n_customers, "cap_alt2": row.cap_alt2, "cap_alt3": row.cap_alt3,
            "seed": row.seed, "instance_digest": row.instance_digest, "draw_digest": row.draw_digest,
            "gap_percent": row.gap_percent,
            "models": {k: {"status": r.status, "objective": r.objective, "constraints": r.constraints,
                           "variables": r.variables, "iterations": r.iterations, "nodes": r.nodes,
                           "seconds": r.seconds if config.timings else None,
                           "violations": r.violations, "error": r.error, "outcome": r.outcome}
                       for k, r in row.results.items()},
        })
    return canonical_json(doc) + "\n"


def write_reports(rows: list[ReportRow], config: ExperimentConfig) -> tuple[str, str]:
    base = config.output
    d = os.path.dirname(base)
    if d:
        os.makedirs(d, exist_ok=True)
    paths = (base + ".csv", base + ".json")
    with open(paths[0], "w", newline="") as fh:
        fh.write(csv_text(rows, config.timings))
    with open(paths[1], "w") as fh:
        fh.write(json_text(rows, config))
    return paths

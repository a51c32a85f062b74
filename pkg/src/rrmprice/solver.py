"""LP relaxations via HiGHS dual simplex, branch and bound on top, and an external MPS adapter."""
from __future__ import annotations

import heapq
import math
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from .milp import LinConstraint, MilpModel, VarRef, export_mps

INT_TOL = 1e-6


class NumericInstabilityError(RuntimeError):
    def __init__(self, message, condition=None):
        super().__init__(message if condition is None else f"{message} (coefficient range {condition:.3g})")
        self.condition = condition


class ExternalSpawnError(RuntimeError):
    pass


class ExternalExitError(RuntimeError):
    def __init__(self, command, code, stderr=""):
        super().__init__(f"{command!r} exited with status {code}: {stderr.strip()[:500]}")
        self.code = code


class SolutionParseError(ValueError):
    pass


@dataclass
class SolveOptions:
    time_limit_s: float = 600.0
    abs_gap: float = 1e-6
    rel_gap: float = 1e-9
    node_limit: int | None = None
    threads: int = 1
    branch_rule: str = "pseudo-cost"      # or "most-fractional"
    node_order: str = "best-bound"        # or "depth-first"

    def __post_init__(self):
        if self.time_limit_s <= 0 or self.abs_gap < 0 or self.rel_gap < 0:
            raise ValueError("limits must be positive")
        if self.node_limit is not None and self.node_limit <= 0:
            raise ValueError("node_limit must be positive")
        if self.threads < 1:
            raise ValueError("threads must be a positive integer")
        if self.branch_rule not in ("most-fractional", "pseudo-cost"):
            raise ValueError(f"unknown branch rule {self.branch_rule!r}")
        if self.node_order not in ("best-bound", "depth-first"):
            raise ValueError(f"unknown node order {self.node_order!r}")

    def to_dict(self) -> dict:
        # threads deliberately omitted: results must not depend on it
        return {"time_limit_s": self.time_limit_s, "abs_gap": self.abs_gap, "rel_gap": self.rel_gap,
                "node_limit": self.node_limit, "branch_rule": self.branch_rule,
                "node_order": self.node_order}


@dataclass
class Solution:
    status: str                 # optimal | infeasible | unbounded | time-limit | node-limit
    objective: float | None = None
    values: list | None = None
    bound: float | None = None
    stats: dict = field(default_factory=dict)


class _LpData:
    """Model in linprog's minimisation form."""

    def __init__(self, model: MilpModel):
        n = len(model.variables)
        self.n = n
        self.flip = -1.0 if model.sense == "max" else 1.0
        c = np.zeros(n)
        for vid, coef in model.objective:
            c[vid] += coef
        self.c = self.flip * c
        ub_r, ub_c, ub_v, b_ub = [], [], [], []
        eq_r, eq_c, eq_v, b_eq = [], [], [], []
        for con in model.constraints:
            if con.sense == "=":
                k = len(b_eq)
                for vid, a in con.terms:
                    eq_r.append(k); eq_c.append(vid); eq_v.append(a)
                b_eq.append(con.rhs)
            else:
                s = 1.0 if con.sense == "<=" else -1.0
                k = len(b_ub)
                for vid, a in con.terms:
                    ub_r.append(k); ub_c.append(vid); ub_v.append(s * a)
                b_ub.append(s * con.rhs)
        self.A_ub = csr_matrix((ub_v, (ub_r, ub_c)), shape=(len(b_ub), n)) if b_ub else None
        self.b_ub = np.array(b_ub) if b_ub else None
        self.A_eq = csr_matrix((eq_v, (eq_r, eq_c)), shape=(len(b_eq), n)) if b_eq else None
        self.b_eq = np.array(b_eq) if b_eq else None
        self.lower = np.array([v.lower for v in model.variables], dtype=float)
        self.upper = np.array([v.upper for v in model.variables], dtype=float)
        self.binaries = np.array([v.id for v in model.variables if v.kind == "binary"], dtype=int)
        # branching priority classes by tag family (lower branches first)
        order = list(model.meta.get("branch_priority", ()))
        rank = {f: k for k, f in enumerate(order)}
        self.priority = np.array([rank.get(model.variables[k].tag[0], len(order)) for k in self.binaries])
        coefs = np.abs(np.concatenate([ub_v, eq_v])) if (ub_v or eq_v) else np.ones(1)
        coefs = coefs[coefs > 0]
        self.coef_range = float(coefs.max() / coefs.min()) if coefs.size else 1.0

    def solve(self, lower, upper):
        if np.any(lower > upper + 1e-12):
            return "infeasible", None, None, 0
        bounds = np.column_stack([lower, upper])
        bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
                  for lo, hi in bounds]
        res = linprog(self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq, b_eq=self.b_eq,
                      bounds=bounds, method="highs-ds")
        nit = int(getattr(res, "nit", 0) or 0)
        if res.status == 0:
            return "optimal", self.flip * float(res.fun), res.x, nit
        if res.status == 2:
            return "infeasible", None, None, nit
        if res.status == 3:
            return "unbounded", None, None, nit
        if res.status == 4:
            raise NumericInstabilityError("LP solve ran into numerical difficulties", self.coef_range)
        return "time-limit", None, None, nit


def solve_lp(model: MilpModel) -> Solution:
    """Solve the continuous relaxation (binaries relaxed to [0, 1])."""
    t0 = time.perf_counter()
    lp = _LpData(model)
    status, obj, x, nit = lp.solve(lp.lower, lp.upper)
    return Solution(status, obj, None if x is None else [float(v) for v in x], obj,
                    {"iterations": nit, "nodes": 0, "seconds": time.perf_counter() - t0,
                     "external": False})


def resolve_fixed(model: MilpModel, values) -> Solution:
    """Re-solve the LP with every binary fixed at its rounded value in ``values``."""
    lp = _LpData(model)
    lo, hi = lp.lower.copy(), lp.upper.copy()
    for k in lp.binaries:
        lo[k] = hi[k] = round(values[k])
    status, obj, x, nit = lp.solve(lo, hi)
    return Solution(status, obj, None if x is None else [float(v) for v in x], obj,
                    {"iterations": nit, "nodes": 0})


@dataclass(order=True)
class _Node:
    key: tuple
    lower: np.ndarray = field(compare=False)
    upper: np.ndarray = field(compare=False)
    bound: float = field(compare=False)
    depth: int = field(compare=False, default=0)
    pending: tuple = field(compare=False, default=())


class _PseudoCosts:
    def __init__(self, n):
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n))

    def update(self, var, direction, frac, degradation):
        d = max(frac if direction == 0 else 1.0 - frac, 1e-9)
        self.sum[direction, var] += max(degradation, 0.0) / d
        self.cnt[direction, var] += 1

    def score(self, cand, fracs):
        known = self.cnt > 0
        mean_all = [self.sum[d][known[d]].mean() if known[d].any() else 1.0 for d in (0, 1)]
        s = np.empty(len(cand))
        for k, (v, f) in enumerate(zip(cand, fracs)):
            down = self.sum[0, v] / self.cnt[0, v] if known[0, v] else mean_all[0]
            up = self.sum[1, v] / self.cnt[1, v] if known[1, v] else mean_all[1]
            s[k] = max(down * f, 1e-6) * max(up * (1.0 - f), 1e-6)
        return s


def components(model: MilpModel) -> list[list[int]]:
    """Variable sets of the connected components of the row/column incidence graph."""
    parent = list(range(len(model.variables)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for con in model.constraints:
        ids = [vid for vid, _ in con.terms]
        root = find(ids[0]) if ids else None
        for vid in ids[1:]:
            rb = find(vid)
            if rb != root:
                parent[max(rb, root)] = min(rb, root)
                root = min(rb, root)
    groups: dict = {}
    for vid in range(len(parent)):
        groups.setdefault(find(vid), []).append(vid)
    return [groups[k] for k in sorted(groups)]


def submodel(model: MilpModel, var_ids: list[int]) -> MilpModel:
    """Restriction of ``model`` to a union of components (variables renumbered)."""
    new = {old: k for k, old in enumerate(var_ids)}
    variables = [VarRef(new[v.id], v.kind, v.lower, v.upper, v.tag)
                 for v in (model.variables[i] for i in var_ids)]
    cons = [LinConstraint(tuple((new[vid], a) for vid, a in c.terms), c.sense, c.rhs, c.label)
            for c in model.constraints if c.terms and c.terms[0][0] in new]
    obj = [(new[vid], c) for vid, c in model.objective if vid in new]
    return MilpModel(variables, cons, obj, model.sense, dict(model.meta))


def solve(model: MilpModel, options: SolveOptions | None = None) -> Solution:
    """Branch and bound, run independently on each connected component of the model.

    The search is sequential and fully deterministic; ``threads`` is accepted for
    interface compatibility and cannot change any result. Among incumbents with
    equal objective (within ``abs_gap``) the lexicographically smallest binary
    vector is kept, per component.
    """
    opts = options or SolveOptions()
    t0 = time.perf_counter()
    parts = components(model)
    if len(parts) == 1:
        return _branch_and_bound(model, opts)
    values = [0.0] * len(model.variables)
    stats = {"nodes": 0, "iterations": 0, "seconds": 0.0, "external": False,
             "threads": opts.threads, "components": len(parts)}
    total = bound = 0.0
    status = "optimal"
    complete = True
    for ids in parts:
        left = opts.time_limit_s - (time.perf_counter() - t0)
        if left <= 0:
            status, complete = "time-limit", False
            break
        sub = _branch_and_bound(submodel(model, ids), replace(opts, time_limit_s=left))
        stats["nodes"] += sub.stats["nodes"]
        stats["iterations"] += sub.stats["iterations"]
        if sub.status in ("infeasible", "unbounded"):
            stats["seconds"] = time.perf_counter() - t0
            return Solution(sub.status, stats=stats)
        if sub.status != "optimal":
            status = sub.status
        if sub.values is None:
            complete = False
            break
        total += sub.objective
        bound += sub.bound
        for k, vid in enumerate(ids):
            values[vid] = sub.values[k]
    stats["seconds"] = time.perf_counter() - t0
    if not complete:
        return Solution(status, stats=stats)
    return Solution(status, total, values, bound, stats)


def _branch_and_bound(model: MilpModel, opts: SolveOptions) -> Solution:
    t0 = time.perf_counter()
    lp = _LpData(model)
    sgn = -lp.flip  # +1 for max: internally we maximise sgn*objective
    bins = lp.binaries
    stats = {"nodes": 0, "iterations": 0, "seconds": 0.0, "external": False,
             "threads": opts.threads}
    pc = _PseudoCosts(lp.n)

    best_val = -math.inf      # in maximisation units
    best_x = None
    best_key = None

    def consider(obj, x):
        nonlocal best_val, best_x, best_key
        v = sgn * obj
        key = tuple(int(round(x[k])) for k in bins)
        if best_x is None or v > best_val + opts.abs_gap:
            best_val, best_x, best_key = v, x, key
        elif abs(v - best_val) <= opts.abs_gap and key < best_key:
            best_val, best_x, best_key = max(best_val, v), x, key

    def prune_level():
        if best_x is None:
            return -math.inf
        return best_val + max(opts.abs_gap, opts.rel_gap * abs(best_val))

    status, obj, x, nit = lp.solve(lp.lower, lp.upper)
    stats["iterations"] += nit
    stats["nodes"] += 1
    if status in ("infeasible", "unbounded"):
        stats["seconds"] = time.perf_counter() - t0
        return Solution(status, stats=stats)
    if status != "optimal":
        stats["seconds"] = time.perf_counter() - t0
        return Solution("time-limit", stats=stats)

    seq = 0
    heap: list[_Node] = []
    stack: list[tuple] = []
    root_bound = sgn * obj

    def push(lo, hi, bound, depth, pending):
        nonlocal seq
        seq += 1
        if opts.node_order == "depth-first":
            stack.append((lo, hi, bound, depth, pending))
        else:
            heapq.heappush(heap, _Node((-bound, -depth, seq), lo, hi, bound, depth, pending))

    # each pending entry caches an already-solved LP: (obj, x)
    def process(lo, hi, obj, x, depth):
        """Branch on a solved node; returns a child to dive into (plunging) or None."""
        xb = x[bins]
        frac = np.abs(xb - np.round(xb))
        cand_mask = frac > INT_TOL
        if not cand_mask.any():
            consider(obj, np.where(np.isin(np.arange(lp.n), bins), np.round(x), x))
            return None
        if sgn * obj <= prune_level():
            return None
        cand_mask &= lp.priority == lp.priority[cand_mask].min()
        cand = bins[cand_mask]
        fr = (xb - np.floor(xb))[cand_mask]
        if opts.branch_rule == "most-fractional":
            k = int(np.argmin(np.abs(fr - 0.5)))
        else:
            k = int(np.argmax(pc.score(cand, fr)))
        var, f = int(cand[k]), float(fr[k])
        children = []
        for direction in (1, 0):
            clo, chi = lo.copy(), hi.copy()
            if direction == 1:
                clo[var] = 1.0
            else:
                chi[var] = 0.0
            st, cobj, cx, cnit = lp.solve(clo, chi)
            stats["iterations"] += cnit
            stats["nodes"] += 1
            if st != "optimal":
                if st == "infeasible":
                    pc.update(var, direction, f, abs(obj) + 1.0)
                continue
            pc.update(var, direction, f, sgn * (obj - cobj))
            if sgn * cobj > prune_level():
                children.append((clo, chi, cobj, cx, depth + 1))
        if not children:
            return None
        # dive into the better child, queue the other
        children.sort(key=lambda c: -sgn * c[2])
        for c in children[1:]:
            push(c[0], c[1], sgn * c[2], c[4], (c[2], c[3]))
        return children[0]

    status_out = "optimal"
    current = (lp.lower.copy(), lp.upper.copy(), obj, x, 0)
    while True:
        while current is not None:
            if time.perf_counter() - t0 > opts.time_limit_s:
                status_out = "time-limit"
                break
            if opts.node_limit is not None and stats["nodes"] >= opts.node_limit:
                status_out = "node-limit"
                break
            current = process(*current)
        if status_out != "optimal":
            break
        if opts.node_order == "depth-first":
            if not stack:
                break
            lo, hi, bound, depth, (pobj, px) = stack.pop()
        else:
            if not heap:
                break
            node = heapq.heappop(heap)
            lo, hi, bound, depth, (pobj, px) = node.lower, node.upper, node.bound, node.depth, node.pending
        if bound <= prune_level():
            if opts.node_order == "best-bound":
                heap.clear()
            continue
        current = (lo, hi, pobj, px, depth)

    open_bounds = [n.bound for n in heap] + [s[2] for s in stack]
    stats["seconds"] = time.perf_counter() - t0
    if best_x is None:
        if status_out == "optimal":
            return Solution("infeasible", stats=stats)
        return Solution(status_out, bound=sgn * root_bound, stats=stats)
    bound = max([best_val, *open_bounds]) if status_out != "optimal" else best_val
    return Solution(status_out, sgn * best_val, [float(v) for v in best_x], sgn * bound, stats)


# -- external solvers ---------------------------------------------------------------

@dataclass
class ExternalSolverConfig:
    command: str                 # template with {model} and {solution}
    dialect: str = "auto"        # "pairs" | "objective-pairs" | "auto"

    def __post_init__(self):
        if not self.command.strip():
            raise ValueError("external solver command is empty")
        if self.dialect not in ("pairs", "objective-pairs", "auto"):
            raise ValueError(f"unknown solution dialect {self.dialect!r}")


def parse_solution_text(text: str, dialect: str = "auto") -> tuple[str, float | None, dict]:
    """Parse ``name value`` lines, optionally headed by ``status <s>`` / ``objective <v>``."""
    status, objective, values = "optimal", None, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("#", "*")):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionParseError(f"line {lineno}: expected two fields, got {line!r}")
        name, val = parts
        if name == "status":
            status = val
            continue
        try:
            num = float(val)
        except ValueError:
            raise SolutionParseError(f"line {lineno}: {val!r} is not a number") from None
        if name == "objective" and objective is None and not values:
            objective = num
            continue
        values[name] = num
    if dialect == "objective-pairs" and objective is None and status == "optimal":
        raise SolutionParseError("missing objective line")
    return status, objective, values


def solve_external(model: MilpModel, config: ExternalSolverConfig,
                   options: SolveOptions | None = None) -> Solution:
    opts = options or SolveOptions()
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="rrmprice-") as tmp:
        mps = os.path.join(tmp, "model.mps")
        sol = os.path.join(tmp, "model.sol")
        with open(mps, "w") as fh:
            fh.write(export_mps(model))
        argv = shlex.split(config.command.format(model=mps, solution=sol,
                                                 time_limit=opts.time_limit_s, threads=opts.threads))
        try:
            proc = subprocess.run(argv, capture_output=True, text=True,
                                  timeout=opts.time_limit_s + 30)
        except (OSError, subprocess.SubprocessError) as exc:
            raise ExternalSpawnError(f"cannot run external solver {argv[0]!r}: {exc}") from exc
        if proc.returncode != 0:
            raise ExternalExitError(argv[0], proc.returncode, proc.stderr)
        try:
            with open(sol) as fh:
                text = fh.read()
        except OSError as exc:
            raise SolutionParseError(f"solution file not written: {exc}") from exc
    status, objective, named = parse_solution_text(text, config.dialect)
    stats = {"nodes": None, "iterations": None, "seconds": time.perf_counter() - t0, "external": True}
    if status != "optimal":
        return Solution(status, stats=stats)
    values = [0.0] * len(model.variables)
    for v in model.variables:
        if v.name not in named:
            raise SolutionParseError(f"no value for variable {v.name}")
        values[v.id] = named[v.name]
    computed = sum(c * values[vid] for vid, c in model.objective)
    if objective is None:
        objective = computed
    elif abs(objective - computed) > 1e-6 * max(1.0, abs(computed)):
        raise SolutionParseError(f"reported objective {objective!r} disagrees with values ({computed!r})")
    return Solution("optimal", objective, values, objective, stats)

"""Exhaustive ground truth for small instances.

Customers are processed in priority order. In capacitated mode a paid alternative
is available to a customer iff it is offered, it was available to the previous
customer holding it, and stock remains. Unavailable alternatives neither count as
choices nor contribute regret.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .builders import PricingOutcome, customer_prices
from .instance import OPT_OUT, Instance
from .stochastic import ERTable, ScenarioDraws

VALUE_TOL = 1e-9
NOT_OFFERED = "withheld"


class SearchSpaceTooLarge(RuntimeError):
    def __init__(self, cardinality, limit):
        super().__init__(f"search space {cardinality:.4g} exceeds the limit {limit:.4g}")
        self.cardinality = cardinality
        self.limit = limit


@dataclass
class SupplierPlan:
    level_choice: dict = field(default_factory=dict)   # (i, n) -> level or None
    offer: dict = field(default_factory=dict)          # (i, n) -> bool

    def offered(self, i, n) -> bool:
        return i == OPT_OUT or self.offer.get((i, n), True)

    def to_dict(self) -> dict:
        key = lambda t: f"{t[0]},{t[1]}"
        return {"level_choice": {key(k): v for k, v in sorted(self.level_choice.items())},
                "offer": {key(k): v for k, v in sorted(self.offer.items())}}


def scores(instance, draws, er, behavior, n, r, avail, prices) -> dict:
    """Total regret (rrm) or negated utility (rum); lower is better."""
    c = instance.customer(n)
    if behavior == "rum":
        return {i: -(c.beta_price * prices[i] + draws.v_util[(i, n, r)]) for i in avail}
    vo, v = draws.v_o[(n, r)], draws.v[(n, r)]
    out = {}
    for i in avail:
        tot = 0.0
        for j in avail:
            if j != i:
                tot += max(vo, c.beta_price * (prices[j] - prices[i]) + v) + er(i, j, n, r)
        out[i] = tot
    return out


def argmin_set(sc: dict, tol: float = 0.0) -> list:
    best = min(sc.values())
    return sorted(i for i, s in sc.items() if s <= best + tol)


def _prices(instance, n, plan: SupplierPlan) -> dict:
    p = {OPT_OUT: 0.0}
    for i in instance.choice_set(n):
        if i != OPT_OUT:
            p[i] = instance.price(i, n, plan.level_choice.get((i, n)))
    return p


def simulate_choices(plan: SupplierPlan, instance: Instance, draws: ScenarioDraws, er: ERTable,
                     behavior: str = "rrm", mode: str = "cap") -> PricingOutcome:
    """Sequential choices under a fixed plan; ties go to higher revenue, then higher id."""
    capacitated = mode == "cap"
    chosen, available, revenue = {}, {}, []
    price = {}
    for c in instance.customers:
        p = _prices(instance, c.id, plan)
        price.update({(i, c.id): v for i, v in p.items() if i != OPT_OUT})
    for r in range(instance.scenario_count):
        remaining = {i: instance.capacity(i) for i in instance.paid_ids}
        alive = {i: True for i in instance.paid_ids}
        tot = 0.0
        for cust in instance.customers_in_order():
            n = cust.id
            cs = instance.choice_set(n)
            if capacitated:
                avail = []
                for i in cs:
                    ok = i == OPT_OUT or (plan.offered(i, n) and alive[i]
                                          and (remaining[i] is None or remaining[i] > 0))
                    if i != OPT_OUT:
                        alive[i] = ok
                    available[(i, n, r)] = ok
                    if ok:
                        avail.append(i)
            else:
                avail = list(cs)
            prices = customer_prices(instance, n, price)
            sc = scores(instance, draws, er, behavior, n, r, avail, prices)
            k = max(argmin_set(sc), key=lambda i: (prices[i], i))
            chosen[(n, r)] = k
            if k != OPT_OUT:
                tot += prices[k]
                if capacitated and remaining[k] is not None:
                    remaining[k] -= 1
        revenue.append(tot)
    offered = {(i, c.id): plan.offered(i, c.id) for c in instance.customers
               for i in instance.choice_set(c.id) if i != OPT_OUT}
    return PricingOutcome("oracle-" + behavior, price, chosen, revenue,
                          sum(revenue) / instance.scenario_count, offered, available)


# -- exact optimisation ------------------------------------------------------------

def _options(instance, n, capacitated):
    """Per paid alternative, decision options in plan order: withheld < bare < levels."""
    out = []
    for i in instance.choice_set(n):
        if i == OPT_OUT:
            continue
        opts = ([NOT_OFFERED] if capacitated else []) + [None, *instance.levels(i, n)]
        out.append((i, opts))
    return out


def plan_cardinality(instance: Instance, mode: str) -> int:
    total = 1
    for c in instance.customers:
        for _, opts in _options(instance, c.id, mode == "cap"):
            total *= len(opts)
    return total


def _scenario_groups(instance, draws, er, behavior):
    """Merge scenarios whose relevant draws coincide for every customer; returns [(r, weight)]."""
    groups: dict = {}
    for r in range(instance.scenario_count):
        sig = []
        for c in instance.customers:
            n = c.id
            cs = instance.choice_set(n)
            if behavior == "rum":
                sig.append(tuple(draws.v_util[(i, n, r)] for i in cs))
            else:
                sig.append((draws.v_o[(n, r)], draws.v[(n, r)],
                            tuple(er(i, j, n, r) for i in cs for j in cs if i != j)))
        groups.setdefault(tuple(sig), []).append(r)
    return [(rs[0], len(rs)) for rs in groups.values()]


def oracle_optimize(instance: Instance, draws: ScenarioDraws, er: ERTable, mode: str = "uncap",
                    behavior: str = "rrm", max_work: float = 1e7):
    """Exact best average revenue and the lexicographically smallest optimal plan.

    Dynamic programming over customers in priority order; the state is, per
    scenario, remaining stock and chain liveness of each paid alternative. In
    capacitated mode every resolution of an argmin tie is explored (the MILP may
    pick any minimiser); otherwise ties go to the higher price. ``max_work`` bounds
    the number of (state, decision) evaluations.
    """
    if mode not in ("cap", "uncap") or behavior not in ("rrm", "rum"):
        raise ValueError(f"unsupported mode/behavior {mode!r}/{behavior!r}")
    capacitated = mode == "cap"
    order = [c.id for c in instance.customers_in_order()]
    paid = instance.paid_ids
    groups = _scenario_groups(instance, draws, er, behavior) if capacitated else [
        (r, 1) for r in range(instance.scenario_count)]
    R = instance.scenario_count
    decisions = []
    for n in order:
        opts = _options(instance, n, capacitated)
        decisions.append((opts, list(itertools.product(*(o for _, o in opts)))))
    card = plan_cardinality(instance, mode)
    work = [0]
    score_cache: dict = {}

    def choice_options(n, r, avail, prices):
        key = (n, r, avail, tuple(prices[i] for i in avail))
        hit = score_cache.get(key)
        if hit is None:
            sc = scores(instance, draws, er, behavior, n, r, avail, prices)
            ties = argmin_set(sc)
            if not capacitated:
                ties = [max(ties, key=lambda i: (prices[i], i))]
            hit = score_cache[key] = ties
        return hit

    memo: dict = {}

    def best(k, state):
        if k == len(order):
            return 0.0, ()
        key = (k, state)
        if key in memo:
            return memo[key]
        n = order[k]
        cs = instance.choice_set(n)
        opts, combos = decisions[k]
        work[0] += len(combos)
        if work[0] > max_work:
            raise SearchSpaceTooLarge(max(card, work[0]), max_work)
        top = (-math.inf, None)
        for combo in combos:
            choice = dict(zip((i for i, _ in opts), combo))
            prices = {OPT_OUT: 0.0}
            for i, o in choice.items():
                prices[i] = instance.price(i, n, None if o == NOT_OFFERED else o)
            per_group = []
            for g, (r, weight) in enumerate(groups):
                if capacitated:
                    rem, alive = state[g]
                    rem, alive = dict(zip(paid, rem)), dict(zip(paid, alive))
                    avail = []
                    for i in cs:
                        ok = i == OPT_OUT or (choice[i] != NOT_OFFERED and alive[i]
                                              and (rem[i] is None or rem[i] > 0))
                        if i != OPT_OUT:
                            alive[i] = ok
                        if ok:
                            avail.append(i)
                    avail = tuple(avail)
                else:
                    rem = alive = None
                    avail = tuple(cs)
                outs = []
                for ch in choice_options(n, r, avail, prices):
                    gain = weight * prices[ch] / R
                    if capacitated:
                        nrem = dict(rem)
                        if ch != OPT_OUT and nrem[ch] is not None:
                            nrem[ch] -= 1
                        nxt = (tuple(nrem[i] for i in paid), tuple(alive[i] for i in paid))
                    else:
                        nxt = None
                    outs.append((gain, nxt))
                per_group.append(outs)
            for branch in itertools.product(*per_group):
                gain = sum(b[0] for b in branch)
                nstate = tuple(b[1] for b in branch) if capacitated else ()
                val, suffix = best(k + 1, nstate)
                val += gain
                cand = (combo, *suffix)
                if top[1] is None or val > top[0] + VALUE_TOL:
                    top = (val, cand)
                elif abs(val - top[0]) <= VALUE_TOL and _lex_less(cand, top[1]):
                    top = (max(val, top[0]), cand)
        memo[key] = top
        return top

    start = tuple(((tuple(instance.capacity(i) for i in paid), tuple(True for _ in paid))
                   for _ in groups)) if capacitated else ()
    value, combos = best(0, start)
    plan = SupplierPlan()
    for k, combo in enumerate(combos):
        n = order[k]
        for (i, _), o in zip(decisions[k][0], combo):
            if capacitated:
                plan.offer[(i, n)] = o != NOT_OFFERED
            plan.level_choice[(i, n)] = None if o == NOT_OFFERED else o
    return value, plan


def _rank(o):
    return -2 if o == NOT_OFFERED else (-1 if o is None else o)


def _lex_less(a, b) -> bool:
    if b is None:
        return True
    ka = [tuple(_rank(o) for o in combo) for combo in a]
    kb = [tuple(_rank(o) for o in combo) for combo in b]
    return ka < kb


def brute_force_optimize(instance: Instance, draws: ScenarioDraws, er: ERTable, mode: str = "uncap",
                         behavior: str = "rrm", max_plans: int = 200_000) -> float:
    """Enumerate every plan; per scenario take the best path through argmin ties."""
    capacitated = mode == "cap"
    card = plan_cardinality(instance, mode)
    if card > max_plans:
        raise SearchSpaceTooLarge(card, max_plans)
    order = [c.id for c in instance.customers_in_order()]
    per_cust = [_options(instance, n, capacitated) for n in order]
    flat = [(n, i, opts) for n, o in zip(order, per_cust) for i, opts in o]
    top = -math.inf
    for combo in itertools.product(*(opts for _, _, opts in flat)):
        plan = SupplierPlan()
        for (n, i, _), o in zip(flat, combo):
            plan.offer[(i, n)] = o != NOT_OFFERED
            plan.level_choice[(i, n)] = None if o == NOT_OFFERED else o
        total = sum(_best_path(instance, draws, er, behavior, plan, order, r, capacitated)
                    for r in range(instance.scenario_count))
        top = max(top, total / instance.scenario_count)
    return top


def _best_path(instance, draws, er, behavior, plan, order, r, capacitated):
    def go(k, rem, alive):
        if k == len(order):
            return 0.0
        n = order[k]
        prices = _prices(instance, n, plan)
        cs = instance.choice_set(n)
        alive = dict(alive)
        if capacitated:
            avail = []
            for i in cs:
                ok = i == OPT_OUT or (plan.offered(i, n) and alive[i] and (rem[i] is None or rem[i] > 0))
                if i != OPT_OUT:
                    alive[i] = ok
                if ok:
                    avail.append(i)
        else:
            avail = list(cs)
        sc = scores(instance, draws, er, behavior, n, r, avail, prices)
        ties = argmin_set(sc)
        if not capacitated:
            ties = [max(ties, key=lambda i: (prices[i], i))]
        out = -math.inf
        for ch in ties:
            nrem = dict(rem)
            if capacitated and ch != OPT_OUT and nrem[ch] is not None:
                nrem[ch] -= 1
            out = max(out, prices[ch] + go(k + 1, nrem, alive))
        return out

    rem = {i: instance.capacity(i) for i in instance.paid_ids}
    return go(0, rem, {i: True for i in instance.paid_ids})

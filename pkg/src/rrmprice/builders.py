"""MILP builders for regret-based (capacitated / uncapacitated) and utility-based pricing.

Index conventions: alternatives ``i, j`` (0 = opt-out), customers ``n`` by id,
scenarios ``r`` in ``range(R)``, price levels ``l`` as given by the grid.
Customers are walked in priority order wherever sequencing matters.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .instance import OPT_OUT, Instance, Violation
from .milp import INF, MilpModel, ModelBuilder
from .stochastic import (DerivedBounds, ERTable, ScenarioDraws, derive_bounds, compute_er,
                         discounted_bounds, utility_bounds)

KINDS = ("rrm-uncap", "rrm-cap", "rum")
TIE_TOL = 1e-6


class InconsistentInputsError(ValueError):
    pass


class DecodeMismatchError(RuntimeError):
    pass


@dataclass
class PricingOutcome:
    model_kind: str
    price: dict                      # (i, n) -> price charged (paid i only)
    chosen: dict                     # (n, r) -> alternative id or None
    revenue_per_scenario: list
    avg_revenue: float
    offered: dict = field(default_factory=dict)     # (i, n) -> bool
    available: dict = field(default_factory=dict)   # (i, n, r) -> bool

    def to_dict(self) -> dict:
        key = lambda t: ",".join(map(str, t))
        return {
            "model_kind": self.model_kind,
            "avg_revenue": self.avg_revenue,
            "revenue_per_scenario": list(self.revenue_per_scenario),
            "price": {key(k): v for k, v in sorted(self.price.items())},
            "chosen": {key(k): v for k, v in sorted(self.chosen.items())},
            "offered": {key(k): v for k, v in sorted(self.offered.items())},
        }


def _check_inputs(instance: Instance, *parts):
    d = instance.digest()
    for p in parts:
        if p is not None and p.instance_digest != d:
            raise InconsistentInputsError(
                f"{type(p).__name__} was derived from instance {p.instance_digest[:12]}, "
                f"expected {d[:12]}")


# branching on choices first closes the big-M gaps fastest
BRANCH_PRIORITY = ("yr", "w", "y")


def _meta(instance, draws):
    return {"instance_digest": instance.digest(), "draw_digest": draws.digest(),
            "n_customers": instance.n_customers, "scenarios": instance.scenario_count,
            "branch_priority": BRANCH_PRIORITY}


def _price_block(mb: ModelBuilder, instance: Instance, n: int) -> dict:
    """Level binaries and the per-(i, n) level rows. Returns {i: [(lam_id, pm*l)]}."""
    pm = instance.price_grid.pm
    terms = {OPT_OUT: []}
    for i in instance.choice_set(n):
        if i == OPT_OUT:
            continue
        lv = instance.levels(i, n)
        terms[i] = [(mb.binary("lam", i, n, l), pm * l) for l in lv]
        if lv:
            mb.add(("lamsum", i, n), [(lam, 1.0) for lam, _ in terms[i]], "<=", 1.0)
            mb.add(("pcap", i, n), terms[i], "<=", instance.mp(i, n) - instance.lp(i, n))
    return terms


def _revenue_block(mb, instance, n, r, w, price_terms, strengthen=True):
    """alpha = lambda AND w (upper-side linearization) and the objective terms.

    With ``strengthen`` the aggregated row sum_l alpha <= w is added; it is implied
    by sum_l lambda <= 1 at integral points and closes most of the relaxation gap.
    """
    R = instance.scenario_count
    for i in instance.choice_set(n):
        if i == OPT_OUT:
            continue
        mb.add_objective(w[i], instance.lp(i, n) / R)
        alphas = []
        for lam, step in price_terms[i]:
            l = mb.variables[lam].tag[3]
            a = mb.binary("alpha", i, n, r, l)
            mb.add(("alam", i, n, r, l), [(a, 1.0), (lam, -1.0)], "<=", 0.0)
            mb.add(("aw", i, n, r, l), [(a, 1.0), (w[i], -1.0)], "<=", 0.0)
            mb.add_objective(a, step / R)
            alphas.append(a)
        if strengthen and alphas:
            mb.add(("asum", i, n, r), [*((a, 1.0) for a in alphas), (w[i], -1.0)], "<=", 0.0)


def _regret_pairs(mb, instance, draws, bounds, n, r, price_terms):
    """RR_ijnr = max{v_o, beta*(p_j - p_i) + v} via one binary per ordered pair."""
    c = instance.customer(n)
    vo, v = draws.v_o[(n, r)], draws.v[(n, r)]
    cs = instance.choice_set(n)
    rr = {}
    for i in cs:
        for j in cs:
            if i == j:
                continue
            key = (i, j, n, r)
            x = mb.continuous("RR", *key, lower=bounds.ll[key], upper=bounds.mm[key])
            b = mb.binary("b", *key)
            big = bounds.M_pair[key]
            const = c.beta_price * (instance.lp(j, n) - instance.lp(i, n)) + v
            dterms = [(lam, -c.beta_price * s) for lam, s in price_terms[j]]
            dterms += [(lam, c.beta_price * s) for lam, s in price_terms[i]]
            mb.add(("rrvo", *key), [(x, 1.0)], ">=", vo)
            mb.add(("rrvom", *key), [(x, 1.0), (b, -big)], "<=", vo)
            mb.add(("rrpr", *key), [(x, 1.0), *dterms], ">=", const)
            mb.add(("rrprm", *key), [(x, 1.0), *dterms, (b, big)], "<=", const + big)
            rr[(i, j)] = x
    return rr


def _compat_rows(mb, instance, draws, er, n, r, price_terms, w, yr):
    """Choice-compatibility cuts for choice sets with at most one competing paid alternative.

    Paid i can be chosen at a given price only if the competitor j sits at a price
    (or is unavailable) under which i is a minimiser of total regret. The feasible
    contexts are enumerated exactly, so every row is valid for the integer model.
    """
    cs = instance.choice_set(n)
    paid = [i for i in cs if i != OPT_OUT]
    if len(paid) > 2:
        return

    def argmin_ok(i, prices, avail):
        sc = {k: realized_regret(instance, draws, er, n, r, k, avail, prices) for k in avail}
        return sc[i] <= min(sc.values()) + 1e-7

    for i in paid:
        others = [j for j in paid if j != i]
        j = others[0] if others else None
        lam_i = {mb.variables[lam].tag[3]: lam for lam, _ in price_terms[i]}
        for li in [None, *lam_i]:
            p_i = instance.price(i, n, li)
            if li is None:
                lhs = [(w[i], 1.0), *((mb.index[("alpha", i, n, r, l)], -1.0) for l in lam_i)]
            else:
                lhs = [(mb.index[("alpha", i, n, r, li)], 1.0)]
            solo = argmin_ok(i, {OPT_OUT: 0.0, i: p_i}, [OPT_OUT, i])
            if j is None:
                if not solo:
                    mb.add(("compat", i, n, r, -1 if li is None else li), lhs, "<=", 0.0)
                continue
            lam_j = {mb.variables[lam].tag[3]: lam for lam, _ in price_terms[j]}
            ok = {lj for lj in [None, *lam_j]
                  if argmin_ok(i, {OPT_OUT: 0.0, i: p_i, j: instance.price(j, n, lj)},
                               [OPT_OUT, i, j])}
            tag = -1 if li is None else li
            if yr is not None and not solo:
                # i only wins against the opt-out while j is still on the shelf
                mb.add(("compaty", i, n, r, tag), [*lhs, (yr[j], -1.0)], "<=", 0.0)
            if len(ok) == len(lam_j) + 1:
                continue
            # lhs <= sum_{lj in ok} [j priced at lj] + [solo] (1 - yr_j)
            terms, rhs = list(lhs), 0.0
            for lj, lam in lam_j.items():
                coef = (1.0 if lj in ok else 0.0) - (1.0 if None in ok else 0.0)
                if coef:
                    terms.append((lam, -coef))
            if None in ok:
                rhs += 1.0
            if yr is not None and solo:
                terms.append((yr[j], 1.0))
                rhs += 1.0
            mb.add(("compat", i, n, r, tag), terms, "<=", rhs)


def build_rrm_uncap(instance: Instance, draws: ScenarioDraws, er: ERTable,
                    bounds: DerivedBounds, strengthen: bool = True) -> MilpModel:
    _check_inputs(instance, draws, er, bounds)
    mb = ModelBuilder("rrm-uncap", _meta(instance, draws))
    for cust in instance.customers_in_order():
        n = cust.id
        cs = instance.choice_set(n)
        pt = _price_block(mb, instance, n)
        for r in range(instance.scenario_count):
            rr = _regret_pairs(mb, instance, draws, bounds, n, r, pt)
            R = {i: mb.continuous("R", i, n, r, lower=bounds.l_alt[(i, n, r)],
                                  upper=bounds.m_alt[(i, n, r)]) for i in cs}
            Rmin = mb.continuous("Rmin", n, r, lower=bounds.l_cust[(n, r)], upper=bounds.m_cust[(n, r)])
            w = {i: mb.binary("w", i, n, r) for i in cs}
            Mc = bounds.M_cust[(n, r)]
            for i in cs:
                others = [j for j in cs if j != i]
                mb.add(("Rdef", i, n, r), [(R[i], 1.0), *((rr[(i, j)], -1.0) for j in others)],
                       "=", sum(er(i, j, n, r) for j in others))
            for i in cs:
                mb.add(("Rminle", i, n, r), [(Rmin, 1.0), (R[i], -1.0)], "<=", 0.0)
            for i in cs:
                mb.add(("Rminge", i, n, r), [(R[i], 1.0), (Rmin, -1.0), (w[i], Mc)], "<=", Mc)
            # without this row tied alternatives could all be 'chosen' and each bill revenue
            mb.add(("one", n, r), [(w[i], 1.0) for i in cs], "<=", 1.0)
            _revenue_block(mb, instance, n, r, w, pt, strengthen)
    return mb.build()


def effective_capacity(instance: Instance, i: int) -> int:
    """Capacity used in the sequential rows; unbounded becomes 'one per customer'."""
    c = instance.capacity(i)
    holders = sum(i in instance.choice_set(cu.id) for cu in instance.customers)
    return holders if c is None else c


def build_rrm_cap(instance: Instance, draws: ScenarioDraws, er: ERTable,
                  bounds: DerivedBounds, strengthen: bool = True) -> MilpModel:
    """Capacitated model with availability variables and discounted regret.

    ``strengthen`` adds the prefix capacity rows sum_{m<=n} w_imr <= c_i and the
    aggregated alpha rows. Both are implied at integral points but tighten the relaxation.
    """
    _check_inputs(instance, draws, er, bounds)
    mb = ModelBuilder("rrm-cap", _meta(instance, draws))
    alt_lo, alt_hi, cust_lo, cust_hi = discounted_bounds(instance, er, bounds)
    Mz = bounds.M_global
    N = instance.n_customers
    order = instance.customers_in_order()
    # earlier customers (in priority order) holding i in their choice set
    earlier = {i: [] for i in instance.paid_ids}
    W = {}  # (i, n, r) -> w id
    Y = {}  # (i, n, r) -> yr id
    for cust in order:
        n = cust.id
        cs = instance.choice_set(n)
        pt = _price_block(mb, instance, n)
        y = {}
        for i in cs:
            if i == OPT_OUT:
                y[i] = mb.continuous("y", i, n, lower=1.0, upper=1.0)
            else:
                y[i] = mb.binary("y", i, n)
        for r in range(instance.scenario_count):
            yr = {}
            for i in cs:
                if i == OPT_OUT:
                    yr[i] = mb.continuous("yr", i, n, r, lower=1.0, upper=1.0)
                else:
                    yr[i] = mb.binary("yr", i, n, r)
                Y[(i, n, r)] = yr[i]
                mb.add(("offer", i, n, r), [(yr[i], 1.0), (y[i], -1.0)], "<=", 0.0)
            rr = _regret_pairs(mb, instance, draws, bounds, n, r, pt)
            z = {}
            for i in cs:
                for j in cs:
                    if i == j:
                        continue
                    key = (i, j, n, r)
                    zz = mb.continuous("z", *key, lower=-Mz, upper=Mz)
                    e = er(*key)
                    x = rr[(i, j)]
                    # z = (RR + ER) * yr_j
                    mb.add(("zub", *key), [(zz, 1.0), (x, -1.0), (yr[j], Mz)], "<=", e + Mz)
                    mb.add(("zlb", *key), [(zz, 1.0), (x, -1.0), (yr[j], -Mz)], ">=", e - Mz)
                    mb.add(("zon", *key), [(zz, 1.0), (yr[j], -Mz)], "<=", 0.0)
                    mb.add(("zoff", *key), [(zz, 1.0), (yr[j], Mz)], ">=", 0.0)
                    z[(i, j)] = zz
            R = {i: mb.continuous("R", i, n, r, lower=alt_lo[(i, n, r)], upper=alt_hi[(i, n, r)])
                 for i in cs}
            Rmin = mb.continuous("Rmin", n, r, lower=cust_lo[(n, r)], upper=cust_hi[(n, r)])
            w = {i: mb.binary("w", i, n, r) for i in cs}
            for i in cs:
                W[(i, n, r)] = w[i]
            Mc = cust_hi[(n, r)] - cust_lo[(n, r)]
            for i in cs:
                mb.add(("Rdef", i, n, r), [(R[i], 1.0), *((z[(i, j)], -1.0) for j in cs if j != i)],
                       "=", 0.0)
            for i in cs:
                mb.add(("avail", i, n, r), [(w[i], 1.0), (yr[i], -1.0)], "<=", 0.0)
            for i in cs:
                mb.add(("Rminle", i, n, r), [(Rmin, 1.0), (R[i], -1.0), (yr[i], Mc)], "<=", Mc)
            for i in cs:
                mb.add(("Rminge", i, n, r), [(R[i], 1.0), (Rmin, -1.0), (w[i], Mc)], "<=", Mc)
            mb.add(("one", n, r), [(w[i], 1.0) for i in cs], "=", 1.0)

            for i in cs:
                if i == OPT_OUT:
                    continue
                prev = earlier[i]
                cap = effective_capacity(instance, i)
                sold = [(W[(i, m, r)], 1.0) for m in prev]
                if prev:
                    mb.add(("chain", i, n, r), [(yr[i], 1.0), (Y[(i, prev[-1], r)], -1.0)], "<=", 0.0)
                if len(prev) >= cap:
                    # earlier sales <= c-1 while available, <= N-1 otherwise
                    mb.add(("count", i, n, r), [*sold, (yr[i], float(N - cap))], "<=", N - 1.0)
                mb.add(("exhaust", i, n, r),
                       [(y[i], float(cap)), (yr[i], -float(cap)), *((v, -1.0) for v, _ in sold)],
                       "<=", 0.0)
                if strengthen and len(prev) + 1 > cap:
                    mb.add(("prefix", i, n, r), [*sold, (w[i], 1.0)], "<=", float(cap))
            _revenue_block(mb, instance, n, r, w, pt, strengthen)
            if strengthen:
                _compat_rows(mb, instance, draws, er, n, r, pt, w, yr)
        for i in cs:
            if i != OPT_OUT:
                earlier[i].append(n)
    return mb.build()


def build_rum(instance: Instance, draws: ScenarioDraws, strengthen: bool = True) -> MilpModel:
    """Utility-maximizing baseline: U_inr = beta*price + noise, choice = argmax."""
    _check_inputs(instance, draws)
    mb = ModelBuilder("rum", _meta(instance, draws))
    ulo, uhi = utility_bounds(instance, draws)
    for cust in instance.customers_in_order():
        n = cust.id
        cs = instance.choice_set(n)
        pt = _price_block(mb, instance, n)
        for r in range(instance.scenario_count):
            U = {i: mb.continuous("U", i, n, r, lower=ulo[(i, n, r)], upper=uhi[(i, n, r)]) for i in cs}
            Umax = mb.continuous("Umax", n, r, lower=max(ulo[(i, n, r)] for i in cs),
                                 upper=max(uhi[(i, n, r)] for i in cs))
            w = {i: mb.binary("w", i, n, r) for i in cs}
            big = max(uhi[(i, n, r)] for i in cs) - min(ulo[(i, n, r)] for i in cs)
            for i in cs:
                const = cust.beta_price * instance.lp(i, n) + draws.v_util[(i, n, r)]
                mb.add(("Udef", i, n, r),
                       [(U[i], 1.0), *((lam, -cust.beta_price * s) for lam, s in pt[i])], "=", const)
            for i in cs:
                mb.add(("Umaxge", i, n, r), [(Umax, 1.0), (U[i], -1.0)], ">=", 0.0)
            for i in cs:
                mb.add(("Umaxle", i, n, r), [(U[i], 1.0), (w[i], -big), (Umax, -1.0)], ">=", -big)
            mb.add(("one", n, r), [(w[i], 1.0) for i in cs], "<=", 1.0)
            _revenue_block(mb, instance, n, r, w, pt, strengthen)
    return mb.build()


def build_model(kind: str, instance: Instance, draws: ScenarioDraws, er: ERTable | None = None,
                bounds: DerivedBounds | None = None, strengthen: bool = True) -> MilpModel:
    if kind == "rum":
        return build_rum(instance, draws, strengthen)
    er = er if er is not None else compute_er(instance, draws)
    bounds = bounds if bounds is not None else derive_bounds(instance, draws, er)
    if kind == "rrm-uncap":
        return build_rrm_uncap(instance, draws, er, bounds, strengthen)
    if kind == "rrm-cap":
        return build_rrm_cap(instance, draws, er, bounds, strengthen)
    raise ValueError(f"unknown model kind {kind!r}")


# -- decoding and auditing --------------------------------------------------------

def _val(model: MilpModel, values, *tag):
    vid = model.index.get(tuple(tag))
    return None if vid is None else values[vid]


def decode(model: MilpModel, solution, instance: Instance, tol: float = 1e-6) -> PricingOutcome:
    if solution.status != "optimal" and not solution.values:
        raise ValueError(f"cannot decode a solution with status {solution.status!r}")
    kind = model.meta.get("kind")
    vals = solution.values
    price, offered, available, chosen = {}, {}, {}, {}
    for c in instance.customers:
        n = c.id
        cs = instance.choice_set(n)
        for i in cs:
            if i == OPT_OUT:
                continue
            picked = [l for l in instance.levels(i, n) if _val(model, vals, "lam", i, n, l) > 0.5]
            if len(picked) > 1:
                raise DecodeMismatchError(f"several price levels selected for {(i, n)}")
            price[(i, n)] = instance.price(i, n, picked[0] if picked else None)
            y = _val(model, vals, "y", i, n)
            offered[(i, n)] = True if y is None else y > 0.5
        for r in range(instance.scenario_count):
            picks = [i for i in cs if _val(model, vals, "w", i, n, r) > 0.5]
            if len(picks) > 1:
                raise DecodeMismatchError(f"several choices for customer {n} in scenario {r}")
            chosen[(n, r)] = picks[0] if picks else None
            for i in cs:
                yr = _val(model, vals, "yr", i, n, r)
                available[(i, n, r)] = True if yr is None else yr > 0.5
    revenue = []
    for r in range(instance.scenario_count):
        tot = 0.0
        for c in instance.customers:
            k = chosen[(c.id, r)]
            if k is not None and k != OPT_OUT:
                tot += price[(k, c.id)]
        revenue.append(tot)
    avg = sum(revenue) / instance.scenario_count
    if abs(avg - solution.objective) > tol * max(1.0, abs(avg)):
        raise DecodeMismatchError(f"decoded revenue {avg!r} differs from objective {solution.objective!r}")
    return PricingOutcome(kind, price, chosen, revenue, avg, offered, available)


def realized_regret(instance, draws, er, n, r, i, avail, prices) -> float:
    """Total regret of i against the available alternatives at the given prices."""
    c = instance.customer(n)
    vo, v = draws.v_o[(n, r)], draws.v[(n, r)]
    tot = 0.0
    for j in avail:
        if j != i:
            tot += max(vo, c.beta_price * (prices[j] - prices[i]) + v) + er(i, j, n, r)
    return tot


def realized_utility(instance, draws, n, r, i, prices) -> float:
    return instance.customer(n).beta_price * prices[i] + draws.v_util[(i, n, r)]


def customer_prices(instance: Instance, n: int, price: dict) -> dict:
    return {i: (0.0 if i == OPT_OUT else price[(i, n)]) for i in instance.choice_set(n)}


def audit_solution(model_kind: str, instance: Instance, draws: ScenarioDraws, er: ERTable,
                   outcome: PricingOutcome, tol: float = TIE_TOL) -> list[Violation]:
    """Re-derive every choice from first principles; ties are tolerated."""
    out: list[Violation] = []
    capacitated = model_kind == "rrm-cap"
    order = instance.customers_in_order()
    for r in range(instance.scenario_count):
        remaining = {i: instance.capacity(i) for i in instance.paid_ids}
        alive = {i: True for i in instance.paid_ids}
        sold = {i: 0 for i in instance.paid_ids}
        for cust in order:
            n = cust.id
            cs = instance.choice_set(n)
            prices = customer_prices(instance, n, outcome.price)
            if capacitated:
                avail = [i for i in cs if i == OPT_OUT or (
                    outcome.offered.get((i, n), True) and alive[i]
                    and (remaining[i] is None or remaining[i] > 0))]
                for i in cs:
                    if i == OPT_OUT:
                        continue
                    got = outcome.available.get((i, n, r))
                    if got is not None and got != (i in avail):
                        out.append(Violation("availability-mismatch",
                                             f"decoded {got}, replay gives {i in avail}", (i, n, r)))
                    if got is not None and got and not alive[i]:
                        out.append(Violation("availability-not-monotone",
                                             "available after an earlier customer lost access", (i, n, r)))
                    alive[i] = i in avail
            else:
                avail = list(cs)
            k = outcome.chosen.get((n, r))
            if model_kind == "rum":
                score = {i: -realized_utility(instance, draws, n, r, i, prices) for i in avail}
            else:
                score = {i: realized_regret(instance, draws, er, n, r, i, avail, prices) for i in avail}
            best = min(score.values())
            argset = [i for i in avail if score[i] <= best + tol]
            if k is None:
                if capacitated or all(prices[i] > 0 for i in argset):
                    out.append(Violation("no-choice", "no alternative chosen", (n, r)))
            elif k not in avail:
                out.append(Violation("chosen-unavailable", f"alternative {k} not available", (n, r)))
            elif k not in argset:
                code = "not-argmax" if model_kind == "rum" else "not-argmin"
                out.append(Violation(code, f"alternative {k} scores {score[k]!r} > best {best!r}", (n, r)))
            if k is not None and k != OPT_OUT:
                sold[k] += 1
                if remaining[k] is not None:
                    remaining[k] -= 1
        for i in instance.paid_ids:
            cap = instance.capacity(i)
            if capacitated and cap is not None and sold[i] > cap:
                out.append(Violation("capacity-exceeded", f"{sold[i]} sold > capacity {cap}", (i, r)))
        rev = sum(outcome.price[(outcome.chosen[(c.id, r)], c.id)] for c in instance.customers
                  if outcome.chosen[(c.id, r)] not in (None, OPT_OUT))
        if abs(rev - outcome.revenue_per_scenario[r]) > 1e-9 * max(1.0, abs(rev)):
            out.append(Violation("revenue-mismatch", f"{rev!r} != {outcome.revenue_per_scenario[r]!r}", (r,)))
    return out


def check_tightness(model: MilpModel, solution, instance: Instance, draws: ScenarioDraws,
                    er: ERTable, outcome: PricingOutcome, tol: float = 1e-6) -> list[Violation]:
    """Linearization laws at the solution: RR = realized max, z = discounted regret, alpha = lambda*w."""
    out = []
    vals = solution.values
    kind = model.meta.get("kind")
    for c in instance.customers:
        n = c.id
        cs = instance.choice_set(n)
        prices = customer_prices(instance, n, outcome.price)
        for r in range(instance.scenario_count):
            if kind != "rum":
                vo, v = draws.v_o[(n, r)], draws.v[(n, r)]
                for i in cs:
                    for j in cs:
                        if i == j:
                            continue
                        want = max(vo, c.beta_price * (prices[j] - prices[i]) + v)
                        got = _val(model, vals, "RR", i, j, n, r)
                        if abs(got - want) > tol:
                            out.append(Violation("rr-not-tight", f"{got!r} != {want!r}", (i, j, n, r)))
                        if kind == "rrm-cap":
                            zwant = (want + er(i, j, n, r)) * (1.0 if _val(model, vals, "yr", j, n, r) > 0.5 else 0.0)
                            zgot = _val(model, vals, "z", i, j, n, r)
                            if abs(zgot - zwant) > tol:
                                out.append(Violation("z-not-discounted", f"{zgot!r} != {zwant!r}", (i, j, n, r)))
            for i in cs:
                if i == OPT_OUT:
                    continue
                w = _val(model, vals, "w", i, n, r)
                for l in instance.levels(i, n):
                    lam = _val(model, vals, "lam", i, n, l)
                    a = _val(model, vals, "alpha", i, n, r, l)
                    if abs(a - round(lam) * round(w)) > tol:
                        out.append(Violation("alpha-not-product", f"{a!r} != {lam!r}*{w!r}", (i, n, r, l)))
    return out

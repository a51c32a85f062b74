"""Scenario draws, non-price attribute regret, and big-M bound parameters."""
from __future__ import annotations

import hashlib
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .instance import OPT_OUT, Instance, canonical_json

# stream roles; the integer is part of every stream key
ROLES = {
    "regret-o": 1,      # v_onr
    "regret": 2,        # v_nr
    "attr-o": 3,        # v_onxr
    "attr": 4,          # v_nxkr
    "rum-utility": 5,   # utility noise per (i, n, r)
}


def gumbel_quantile(u: float) -> float:
    """Inverse CDF of the standard Gumbel distribution."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"u={u!r} outside (0, 1)")
    return -math.log(-math.log(u))


def attribute_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def keyed_stream(seed: int, role: str, *key: int) -> np.random.Generator:
    """Independent counter-based generator for one (seed, role, key) tuple."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(ROLES[role], *key))
    return np.random.Generator(np.random.Philox(ss))


def draw_gumbel(gen: np.random.Generator, positive_only: bool = True) -> float:
    while True:
        u = gen.random()
        if u == 0.0:
            continue
        g = gumbel_quantile(u)
        if g > 0.0 or not positive_only:
            return g


def positive_gumbel_sample(gen: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized rejection sampler for Gumbel(0,1) conditioned on > 0."""
    out = np.empty(0)
    while out.size < size:
        u = gen.random(2 * (size - out.size) + 16)
        u = u[u > 0.0]
        g = -np.log(-np.log(u))
        out = np.concatenate([out, g[g > 0.0]])
    return out[:size]


def truncated_gumbel_moments(lower: float = 0.0) -> tuple[float, float]:
    """Mean and variance of Gumbel(0,1) conditioned on G > lower, by quadrature."""
    from scipy.integrate import quad

    pdf = lambda g: math.exp(-g - math.exp(-g))
    mass = 1.0 - math.exp(-math.exp(-lower))
    m1 = quad(lambda g: g * pdf(g), lower, np.inf, epsabs=1e-13, epsrel=1e-13)[0] / mass
    m2 = quad(lambda g: g * g * pdf(g), lower, np.inf, epsabs=1e-13, epsrel=1e-13)[0] / mass
    return m1, m2 - m1 * m1


@dataclass
class ScenarioDraws:
    instance_digest: str
    v_o: dict = field(default_factory=dict)        # (n, r) -> v_onr
    v: dict = field(default_factory=dict)          # (n, r) -> v_nr
    v_attr_o: dict = field(default_factory=dict)   # (n, x, r)
    v_attr: dict = field(default_factory=dict)     # (n, x, k, r)
    v_util: dict = field(default_factory=dict)     # (i, n, r)

    def to_dict(self) -> dict:
        key = lambda t: ",".join(map(str, t))
        return {name: {key(k): float(v) for k, v in getattr(self, name).items()}
                for name in ("v_o", "v", "v_attr_o", "v_attr", "v_util")}

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()


def sample_draws(instance: Instance) -> ScenarioDraws:
    seed, pos = instance.seed, instance.positive_draws_only
    d = ScenarioDraws(instance.digest())
    attrs = instance.attribute_names
    for c in instance.customers:
        n = c.id
        for r in range(instance.scenario_count):
            d.v_o[(n, r)] = draw_gumbel(keyed_stream(seed, "regret-o", n, r), pos)
            d.v[(n, r)] = draw_gumbel(keyed_stream(seed, "regret", n, r), pos)
            for x in attrs:
                xk = attribute_key(x)
                d.v_attr_o[(n, x, r)] = draw_gumbel(keyed_stream(seed, "attr-o", n, xk, r), pos)
                n_levels = len(instance.alternatives[0].attributes[x])
                for k in range(n_levels):
                    d.v_attr[(n, x, k, r)] = draw_gumbel(keyed_stream(seed, "attr", n, xk, k, r), pos)
            for i in instance.alternative_ids:
                d.v_util[(i, n, r)] = draw_gumbel(keyed_stream(seed, "rum-utility", i, n, r), pos)
    return d


def dominance_draws(instance: Instance, v_o: float = 10.0, v: float = 0.1,
                    base: ScenarioDraws | None = None) -> ScenarioDraws:
    """Constant regret draws large enough that every pairwise max is v_o.

    Attribute and utility draws are taken from ``base`` (or sampled).
    """
    d = base if base is not None else sample_draws(instance)
    out = ScenarioDraws(d.instance_digest, v_attr_o=dict(d.v_attr_o), v_attr=dict(d.v_attr),
                        v_util=dict(d.v_util))
    for c in instance.customers:
        for r in range(instance.scenario_count):
            out.v_o[(c.id, r)] = v_o
            out.v[(c.id, r)] = v
    return out


# -- regret terms ----------------------------------------------------------------

def pairwise_attr_regret(beta: float, x_i: float, x_j: float, v_o: float, v: float) -> float:
    return max(v_o, beta * (x_j - x_i) + v)


@dataclass
class ERTable:
    instance_digest: str
    er: dict = field(default_factory=dict)  # (i, j, n, r) -> ER_ijnr

    def __call__(self, i, j, n, r) -> float:
        return self.er.get((i, j, n, r), 0.0)


def compute_er(instance: Instance, draws: ScenarioDraws) -> ERTable:
    table = ERTable(instance.digest())
    attrs = instance.attribute_names
    if not attrs:
        return table
    for c in instance.customers:
        n = c.id
        cs = instance.choice_set(n)
        for r in range(instance.scenario_count):
            for i in cs:
                ai = instance.alternative(i).attributes
                for j in cs:
                    if i == j:
                        continue
                    aj = instance.alternative(j).attributes
                    total = 0.0
                    for x in attrs:
                        vo = draws.v_attr_o[(n, x, r)]
                        for k, (xi, xj) in enumerate(zip(ai[x], aj[x])):
                            total += pairwise_attr_regret(c.beta_attrs[x], xi, xj, vo, draws.v_attr[(n, x, k, r)])
                    table.er[(i, j, n, r)] = total
    return table


# -- bounds ----------------------------------------------------------------------

@dataclass
class DerivedBounds:
    instance_digest: str
    mm: dict = field(default_factory=dict)      # (i, j, n, r)
    ll: dict = field(default_factory=dict)
    M_pair: dict = field(default_factory=dict)
    m_alt: dict = field(default_factory=dict)   # (i, n, r)
    l_alt: dict = field(default_factory=dict)
    m_cust: dict = field(default_factory=dict)  # (n, r)
    l_cust: dict = field(default_factory=dict)
    M_cust: dict = field(default_factory=dict)
    M_global: float = 0.0


def price_interval(instance: Instance, i: int, n: int) -> tuple[float, float]:
    """Attainable price range of (i, n) on the pruned grid."""
    return instance.lp(i, n), instance.max_price(i, n)


def scaled_range(beta: float, lo: float, hi: float) -> tuple[float, float]:
    a, b = beta * lo, beta * hi
    return min(a, b), max(a, b)


def derive_bounds(instance: Instance, draws: ScenarioDraws, er: ERTable) -> DerivedBounds:
    b = DerivedBounds(instance.digest())
    big = 0.0
    for c in instance.customers:
        n = c.id
        cs = instance.choice_set(n)
        for r in range(instance.scenario_count):
            vo, v = draws.v_o[(n, r)], draws.v[(n, r)]
            for i in cs:
                lp_i, mp_i = price_interval(instance, i, n)
                for j in cs:
                    if i == j:
                        continue
                    lp_j, mp_j = price_interval(instance, j, n)
                    t_lo, t_hi = scaled_range(c.beta_price, lp_j - mp_i, mp_j - lp_i)
                    mm = max(vo, t_hi + v)
                    ll = min(vo, t_lo + v)
                    b.mm[(i, j, n, r)] = mm
                    b.ll[(i, j, n, r)] = ll
                    b.M_pair[(i, j, n, r)] = mm - ll
                    e = er(i, j, n, r)
                    big = max(big, abs(ll + e), abs(mm + e))
                others = [j for j in cs if j != i]
                b.m_alt[(i, n, r)] = sum(b.mm[(i, j, n, r)] + er(i, j, n, r) for j in others)
                b.l_alt[(i, n, r)] = sum(b.ll[(i, j, n, r)] + er(i, j, n, r) for j in others)
            b.m_cust[(n, r)] = max(b.m_alt[(i, n, r)] for i in cs)
            b.l_cust[(n, r)] = min(b.l_alt[(i, n, r)] for i in cs)
            b.M_cust[(n, r)] = b.m_cust[(n, r)] - b.l_cust[(n, r)]
    b.M_global = big
    return b


def discounted_bounds(instance: Instance, er: ERTable, bounds: DerivedBounds):
    """Bounds on regret sums when some comparison alternatives may be unavailable.

    Each discounted term lies in [min(0, ll+er), max(0, mm+er)]. Returns
    ``(alt_lo, alt_hi, cust_lo, cust_hi)`` dictionaries.
    """
    alt_lo, alt_hi, cust_lo, cust_hi = {}, {}, {}, {}
    for c in instance.customers:
        n = c.id
        cs = instance.choice_set(n)
        for r in range(instance.scenario_count):
            for i in cs:
                lo = hi = 0.0
                for j in cs:
                    if j == i:
                        continue
                    e = er(i, j, n, r)
                    lo += min(0.0, bounds.ll[(i, j, n, r)] + e)
                    hi += max(0.0, bounds.mm[(i, j, n, r)] + e)
                alt_lo[(i, n, r)], alt_hi[(i, n, r)] = lo, hi
            cust_lo[(n, r)] = min(alt_lo[(i, n, r)] for i in cs)
            cust_hi[(n, r)] = max(alt_hi[(i, n, r)] for i in cs)
    return alt_lo, alt_hi, cust_lo, cust_hi


def utility_bounds(instance: Instance, draws: ScenarioDraws):
    """Interval of U_inr = beta*price + noise over the attainable prices."""
    lo, hi = {}, {}
    for c in instance.customers:
        n = c.id
        for r in range(instance.scenario_count):
            for i in instance.choice_set(n):
                a, b_ = scaled_range(c.beta_price, *price_interval(instance, i, n))
                u = draws.v_util[(i, n, r)]
                lo[(i, n, r)], hi[(i, n, r)] = a + u, b_ + u
    return lo, hi

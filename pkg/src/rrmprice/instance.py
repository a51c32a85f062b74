"""Problem input: customers, alternatives, price grid, scenario settings.

Alternative 0 is the opt-out. Capacities use ``None`` for unbounded.
Price bounds are keyed by ``(alternative_id, customer_id)``.
"""
from __future__ import annotations

import hashlib
import json
import math
from functools import cached_property
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

OPT_OUT = 0
PRICE_TOL = 1e-12


@dataclass(frozen=True)
class Alternative:
    id: int
    capacity: int | None = None
    # attribute name -> levels (one value per level k)
    attributes: Mapping[str, tuple[float, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Customer:
    id: int
    priority_rank: int
    beta_price: float = -1.0
    beta_attrs: Mapping[str, float] = field(default_factory=dict)
    # None means "all alternatives"
    choice_set: frozenset[int] | None = None


@dataclass(frozen=True)
class PriceGrid:
    pm: float
    levels: tuple[int, ...]
    lp: Mapping[tuple[int, int], float]
    mp: Mapping[tuple[int, int], float]
    pair_levels: Mapping[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    where: tuple = ()

    def __str__(self):
        loc = f" at {self.where}" if self.where else ""
        return f"{self.code}{loc}: {self.message}"


class InstanceParseError(ValueError):
    """Malformed instance text. ``field`` names the offending key path."""

    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class InvalidInstanceError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Instance:
    customers: tuple[Customer, ...]
    alternatives: tuple[Alternative, ...]
    price_grid: PriceGrid
    scenario_count: int
    seed: int
    positive_draws_only: bool = True

    # -- convenience views ---------------------------------------------------
    @property
    def alternative_ids(self) -> list[int]:
        return sorted(a.id for a in self.alternatives)

    @property
    def paid_ids(self) -> list[int]:
        return [i for i in self.alternative_ids if i != OPT_OUT]

    @property
    def n_customers(self) -> int:
        return len(self.customers)

    @property
    def attribute_names(self) -> list[str]:
        names = set()
        for a in self.alternatives:
            names.update(a.attributes)
        return sorted(names)

    @cached_property
    def _alt_map(self):
        return {a.id: a for a in self.alternatives}

    @cached_property
    def _cust_map(self):
        return {c.id: c for c in self.customers}

    def alternative(self, i: int) -> Alternative:
        return self._alt_map[i]

    def customer(self, n: int) -> Customer:
        return self._cust_map[n]

    def customers_in_order(self) -> list[Customer]:
        """Customers sorted by serving priority (rank 1 first)."""
        return sorted(self.customers, key=lambda c: (c.priority_rank, c.id))

    def choice_set(self, n: int) -> list[int]:
        cs = self.customer(n).choice_set
        if cs is None:
            return self.alternative_ids
        return sorted(set(cs) | {OPT_OUT})

    def lp(self, i: int, n: int) -> float:
        return 0.0 if i == OPT_OUT else float(self.price_grid.lp[(i, n)])

    def mp(self, i: int, n: int) -> float:
        return 0.0 if i == OPT_OUT else float(self.price_grid.mp[(i, n)])

    def levels(self, i: int, n: int) -> list[int]:
        """Price levels for (i, n) after dropping those priced above ``mp``."""
        if i == OPT_OUT:
            return []
        g = self.price_grid
        raw = g.pair_levels.get((i, n), g.levels)
        lp, mp = self.lp(i, n), self.mp(i, n)
        return [l for l in raw if lp + l * g.pm <= mp + PRICE_TOL]

    def price(self, i: int, n: int, level: int | None) -> float:
        if i == OPT_OUT:
            return 0.0
        if level is None:
            return self.lp(i, n)
        return self.lp(i, n) + level * self.price_grid.pm

    def max_price(self, i: int, n: int) -> float:
        lv = self.levels(i, n)
        return self.price(i, n, lv[-1] if lv else None)

    def capacity(self, i: int) -> int | None:
        return None if i == OPT_OUT else self.alternative(i).capacity

    @cached_property
    def _digest(self) -> str:
        return hashlib.sha256(save(self).encode("utf-8")).hexdigest()

    def digest(self) -> str:
        return self._digest


# -- validation ---------------------------------------------------------------

def validate(instance: Instance) -> list[Violation]:
    out: list[Violation] = []
    add = lambda code, msg, where=(): out.append(Violation(code, msg, where))

    ids = [a.id for a in instance.alternatives]
    if len(set(ids)) != len(ids):
        add("duplicate-alternative", "alternative ids must be unique")
    if ids.count(OPT_OUT) == 0:
        add("missing-opt-out", "alternative 0 (opt-out) is required")
    for a in instance.alternatives:
        if a.id < 0:
            add("negative-alternative-id", "alternative ids must be >= 0", (a.id,))
        if a.id == OPT_OUT and a.capacity is not None:
            add("opt-out-capacity", "opt-out must have unbounded capacity", (a.id,))
        if a.capacity is not None and a.capacity < 0:
            add("negative-capacity", f"capacity {a.capacity} < 0", (a.id,))

    names = instance.attribute_names
    shapes = {}
    for a in instance.alternatives:
        if set(a.attributes) != set(names):
            add("attribute-mismatch", "every alternative must carry the same attributes", (a.id,))
            continue
        for x in names:
            shapes.setdefault(x, len(a.attributes[x]))
            if len(a.attributes[x]) != shapes[x]:
                add("attribute-mismatch", f"attribute '{x}' level count differs", (a.id,))

    cids = [c.id for c in instance.customers]
    if not cids:
        add("no-customers", "at least one customer is required")
    if len(set(cids)) != len(cids):
        add("duplicate-customer", "customer ids must be unique")
    ranks = sorted(c.priority_rank for c in instance.customers)
    if ranks != list(range(1, len(ranks) + 1)):
        add("priority-not-permutation", "priority ranks must be a permutation of 1..N")
    idset = set(ids)
    for c in instance.customers:
        if c.choice_set is not None:
            if OPT_OUT not in c.choice_set:
                add("choice-set-missing-opt-out", "choice set must contain 0", (c.id,))
            unknown = sorted(set(c.choice_set) - idset)
            if unknown:
                add("choice-set-unknown-alternative", f"unknown alternatives {unknown}", (c.id,))
        missing = [x for x in names if x not in c.beta_attrs]
        if missing:
            add("missing-attribute-taste", f"no taste for {missing}", (c.id,))
        if not math.isfinite(c.beta_price):
            add("non-finite-taste", "beta_price must be finite", (c.id,))

    g = instance.price_grid
    if not (g.pm > 0 and math.isfinite(g.pm)):
        add("pm-nonpositive", f"price multiplier {g.pm} must be positive")
    for key, lv in [(None, g.levels), *g.pair_levels.items()]:
        if any(l <= 0 for l in lv) or list(lv) != sorted(set(lv)):
            add("levels-invalid", "levels must be strictly increasing positive integers",
                () if key is None else key)
    for c in instance.customers:
        for i in ids:
            if i == OPT_OUT:
                for tab, nm in ((g.lp, "lp"), (g.mp, "mp")):
                    if tab.get((i, c.id), 0.0) != 0.0:
                        add("opt-out-price", f"{nm} of the opt-out must be 0", (i, c.id))
                continue
            if (i, c.id) not in g.lp or (i, c.id) not in g.mp:
                add("price-missing", "lp/mp must be given for every paid pair", (i, c.id))
                continue
            lp, mp = g.lp[(i, c.id)], g.mp[(i, c.id)]
            if lp < 0:
                add("negative-price", f"lp={lp} < 0", (i, c.id))
            if lp > mp:
                add("price-bounds-inverted", f"lp={lp} > mp={mp}", (i, c.id))

    if instance.scenario_count < 1:
        add("scenario-count", "scenario count must be >= 1")
    if not (0 <= instance.seed < 2**64):
        add("seed-range", "seed must be a 64-bit unsigned integer")
    return out


def check(instance: Instance) -> Instance:
    bad = validate(instance)
    if bad:
        raise InvalidInstanceError(bad)
    return instance


# -- canonical JSON -----------------------------------------------------------

def canonical_json(obj: Any, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, reals printed with 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite real {obj!r} cannot be serialized")
        return format(obj, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k)}: {canonical_json(v, indent + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, str, bool)) or v is None for v in obj):
            return "[" + ", ".join(canonical_json(v) for v in obj) + "]"
        body = ",\n".join(pad + canonical_json(v, indent + 1) for v in obj)
        return "[\n" + body + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _pair_table(tab):
    out: dict[str, dict[str, float]] = {}
    for (i, n), v in tab.items():
        out.setdefault(str(i), {})[str(n)] = float(v)
    return out


def to_dict(instance: Instance) -> dict:
    g = instance.price_grid
    price = {"pm": float(g.pm), "levels": list(g.levels), "lp": _pair_table(g.lp), "mp": _pair_table(g.mp)}
    if g.pair_levels:
        price["pair_levels"] = {}
        for (i, n), lv in g.pair_levels.items():
            price["pair_levels"].setdefault(str(i), {})[str(n)] = list(lv)
    return {
        "alternatives": [
            {"id": a.id, "capacity": a.capacity,
             "attributes": {x: [float(v) for v in lv] for x, lv in a.attributes.items()}}
            for a in sorted(instance.alternatives, key=lambda a: a.id)
        ],
        "customers": [
            {"id": c.id, "priority_rank": c.priority_rank, "beta_price": float(c.beta_price),
             "beta_attrs": {x: float(b) for x, b in c.beta_attrs.items()},
             "choice_set": None if c.choice_set is None else sorted(c.choice_set)}
            for c in sorted(instance.customers, key=lambda c: c.id)
        ],
        "price": price,
        "scenarios": {"count": instance.scenario_count, "seed": instance.seed,
                      "positive_draws_only": instance.positive_draws_only},
    }


def save(instance: Instance) -> str:
    return canonical_json(to_dict(instance)) + "\n"


def _get(d, key, path, kind=None):
    if not isinstance(d, dict):
        raise InstanceParseError("expected an object", path)
    if key not in d:
        raise InstanceParseError(f"missing required field '{key}'", f"{path}.{key}" if path else key)
    v = d[key]
    p = f"{path}.{key}" if path else key
    if kind == "int" and (isinstance(v, bool) or not isinstance(v, int)):
        raise InstanceParseError("expected an integer", p)
    if kind == "real" and (isinstance(v, bool) or not isinstance(v, (int, float))):
        raise InstanceParseError("expected a number", p)
    if kind == "bool" and not isinstance(v, bool):
        raise InstanceParseError("expected a boolean", p)
    return v


def _levels(v, path):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return (float(v),)
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise InstanceParseError("expected a number or list of numbers", path)
    return tuple(float(x) for x in v)


def _read_pairs(tab, path, conv=float):
    if not isinstance(tab, dict):
        raise InstanceParseError("expected an object keyed by alternative id", path)
    out = {}
    for si, inner in tab.items():
        if not isinstance(inner, dict):
            raise InstanceParseError("expected an object keyed by customer id", f"{path}.{si}")
        for sn, v in inner.items():
            try:
                key = (int(si), int(sn))
            except ValueError:
                raise InstanceParseError("keys must be integer ids", f"{path}.{si}.{sn}") from None
            out[key] = conv(v, f"{path}.{si}.{sn}")
    return out


def from_dict(d: dict) -> Instance:
    for top in ("customers", "alternatives", "price", "scenarios"):
        _get(d, top, "")
    sc = d["scenarios"]
    count = _get(sc, "count", "scenarios", "int")
    seed = _get(sc, "seed", "scenarios", "int")
    pos = sc.get("positive_draws_only", True)
    if not isinstance(pos, bool):
        raise InstanceParseError("expected a boolean", "scenarios.positive_draws_only")

    alts = []
    for k, a in enumerate(_get(d, "alternatives", "")):
        p = f"alternatives[{k}]"
        cap = a.get("capacity") if isinstance(a, dict) else None
        if cap is not None and (isinstance(cap, bool) or not isinstance(cap, int)):
            raise InstanceParseError("capacity must be an integer or null", f"{p}.capacity")
        attrs = a.get("attributes", {}) if isinstance(a, dict) else {}
        if not isinstance(attrs, dict):
            raise InstanceParseError("expected an object", f"{p}.attributes")
        alts.append(Alternative(
            id=_get(a, "id", p, "int"), capacity=cap,
            attributes={x: _levels(v, f"{p}.attributes.{x}") for x, v in attrs.items()}))

    custs = []
    for k, c in enumerate(_get(d, "customers", "")):
        p = f"customers[{k}]"
        cid = _get(c, "id", p, "int")
        rank = c.get("priority_rank", k + 1)
        if isinstance(rank, bool) or not isinstance(rank, int):
            raise InstanceParseError("expected an integer", f"{p}.priority_rank")
        beta = c.get("beta_price", -1.0)
        if isinstance(beta, bool) or not isinstance(beta, (int, float)):
            raise InstanceParseError("expected a number", f"{p}.beta_price")
        battrs = c.get("beta_attrs", {})
        if not isinstance(battrs, dict):
            raise InstanceParseError("expected an object", f"{p}.beta_attrs")
        cs = c.get("choice_set")
        if cs is not None and (not isinstance(cs, list) or not all(isinstance(x, int) for x in cs)):
            raise InstanceParseError("expected a list of alternative ids or null", f"{p}.choice_set")
        custs.append(Customer(id=cid, priority_rank=rank, beta_price=float(beta),
                              beta_attrs={x: float(b) for x, b in battrs.items()},
                              choice_set=None if cs is None else frozenset(cs)))

    pr = d["price"]
    pm = _get(pr, "pm", "price", "real")
    levels = _get(pr, "levels", "price")
    if not isinstance(levels, list) or not all(isinstance(l, int) and not isinstance(l, bool) for l in levels):
        raise InstanceParseError("expected a list of integers", "price.levels")

    def real(v, path):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InstanceParseError("expected a number", path)
        return float(v)

    def intlist(v, path):
        if not isinstance(v, list) or not all(isinstance(l, int) for l in v):
            raise InstanceParseError("expected a list of integers", path)
        return tuple(v)

    grid = PriceGrid(
        pm=float(pm), levels=tuple(levels),
        lp=_read_pairs(_get(pr, "lp", "price"), "price.lp", real),
        mp=_read_pairs(_get(pr, "mp", "price"), "price.mp", real),
        pair_levels=_read_pairs(pr.get("pair_levels", {}), "price.pair_levels", intlist),
    )
    return Instance(customers=tuple(custs), alternatives=tuple(alts), price_grid=grid,
                    scenario_count=count, seed=seed, positive_draws_only=pos)


def load(text: str) -> Instance:
    """Parse instance JSON. Raises InstanceParseError or InvalidInstanceError."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceParseError(e.msg, line=e.lineno) from None
    if not isinstance(d, dict):
        raise InstanceParseError("top level must be an object", line=1)
    return check(from_dict(d))


# -- experiment family ----------------------------------------------------------

DEFAULT_LP = 1.0
DEFAULT_MP = 4.5
DEFAULT_PM = 0.5
DEFAULT_LEVELS = tuple(range(1, 8))
DEFAULT_SCENARIOS = 4


def synth_instance(n_customers: int, capacities: Sequence[int | None] | None = None,
                   seed: int = 0, scenario_count: int = DEFAULT_SCENARIOS,
                   n_levels: int = len(DEFAULT_LEVELS)) -> Instance:
    """Homogeneous-customer family: opt-out plus two unlabeled paid alternatives.

    ``capacities`` is ``(c_1, c_2)`` for the paid alternatives, or None for unbounded.
    Prices run from 1.0 (no level) to 4.5 (level 7) in steps of 0.5.
    """
    if n_customers < 1:
        raise ValueError("n_customers must be >= 1")
    caps = (None, None) if capacities is None else tuple(capacities)
    if len(caps) != 2:
        raise ValueError("capacities must be a pair")
    alts = (Alternative(0), Alternative(1, caps[0]), Alternative(2, caps[1]))
    custs = tuple(Customer(id=n, priority_rank=n, beta_price=-1.0) for n in range(1, n_customers + 1))
    lp = {(i, n): DEFAULT_LP for i in (1, 2) for n in range(1, n_customers + 1)}
    mp = {(i, n): DEFAULT_MP for i in (1, 2) for n in range(1, n_customers + 1)}
    grid = PriceGrid(pm=DEFAULT_PM, levels=tuple(range(1, n_levels + 1)), lp=lp, mp=mp)
    return check(Instance(customers=custs, alternatives=alts, price_grid=grid,
                          scenario_count=scenario_count, seed=seed))

import dataclasses
import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rrmprice.instance import Alternative, synth_instance
from rrmprice.stochastic import (compute_er, derive_bounds, dominance_draws, gumbel_quantile,
                                 keyed_stream, pairwise_attr_regret, positive_gumbel_sample,
                                 sample_draws, truncated_gumbel_moments)
from strategies import random_instance, small_instances


@pytest.mark.parametrize("u, g", [
    (1 / math.e, 0.0),
    (math.exp(-1 / math.e), 1.0),
    (math.exp(-math.e), -1.0),
])
def test_gumbel_quantile_identities(u, g):
    assert gumbel_quantile(u) == pytest.approx(g, abs=1e-12)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_gumbel_quantile_domain(u):
    with pytest.raises(ValueError):
        gumbel_quantile(u)


@given(st.floats(1e-9, 1 - 1e-9), st.floats(1e-9, 1 - 1e-9))
def test_gumbel_quantile_increasing(a, b):
    if a < b:
        assert gumbel_quantile(a) <= gumbel_quantile(b)


def test_truncated_mean_against_closed_form():
    # E[G | G > 0] = (gamma - Ei(-1)) / (1 - exp(-1)) for the standard Gumbel
    from scipy.special import expi
    closed = (np.euler_gamma - expi(-1.0)) / (1.0 - math.exp(-1.0))
    assert truncated_gumbel_moments()[0] == pytest.approx(closed, rel=1e-10)


def test_draws_are_deterministic_and_positive():
    inst = synth_instance(5, seed=3)
    a, b = sample_draws(inst), sample_draws(inst)
    assert a.digest() == b.digest()
    vals = [*a.v_o.values(), *a.v.values(), *a.v_util.values()]
    assert min(vals) > 0


def test_draws_independent_of_other_customers():
    small, big = sample_draws(synth_instance(2, seed=4)), sample_draws(synth_instance(6, seed=4))
    for key, v in small.v_o.items():
        assert big.v_o[key] == v


def test_draws_allow_negative_when_not_truncated():
    inst = dataclasses.replace(synth_instance(20, seed=1), positive_draws_only=False)
    assert min(sample_draws(inst).v.values()) < 0


def test_keyed_streams_differ_by_role():
    assert keyed_stream(1, "regret", 1, 0).random() != keyed_stream(1, "regret-o", 1, 0).random()


def test_vectorized_sampler_positive():
    x = positive_gumbel_sample(keyed_stream(0, "regret", 0), 10_000)
    assert x.shape == (10_000,) and x.min() > 0


@pytest.mark.parametrize("args, want", [
    ((-1.0, 2.0, 2.0, 0.5, 0.2), 0.5),
    ((-1.0, 4.5, 0.0, 0.3, 0.1), 4.6),
    ((-1.0, 0.0, 4.5, 0.3, 0.1), 0.3),
])
def test_pairwise_attr_regret(args, want):
    assert pairwise_attr_regret(*args) == pytest.approx(want)


def test_er_zero_without_attributes():
    inst = synth_instance(3)
    assert all(v == 0.0 for v in compute_er(inst, sample_draws(inst)).er.values())
    assert compute_er(inst, sample_draws(inst))(1, 2, 1, 0) == 0.0


def _with_attrs(attrs, betas):
    inst = synth_instance(1, scenario_count=1)
    alts = tuple(Alternative(a.id, a.capacity, {x: v[a.id] for x, v in attrs.items()}) for a in inst.alternatives)
    cust = dataclasses.replace(inst.customers[0], beta_attrs=betas)
    return dataclasses.replace(inst, alternatives=alts, customers=(cust,))


def test_er_identical_levels_gives_v_o():
    inst = _with_attrs({"q": {0: (1.0,), 1: (1.0,), 2: (1.0,)}}, {"q": -1.0})
    d = sample_draws(inst)
    d.v_attr_o[(1, "q", 0)] = 0.4
    d.v_attr[(1, "q", 0, 0)] = 0.1
    er = compute_er(inst, d)
    assert {v for v in er.er.values()} == {0.4}


def test_er_additive_over_attributes():
    attrs = {"a": {0: (0.0,), 1: (1.0,), 2: (2.0,)}, "b": {0: (0.5, 1.0), 1: (2.0, 0.0), 2: (1.0, 1.0)}}
    both = _with_attrs(attrs, {"a": 0.7, "b": -0.4})
    d = sample_draws(both)
    total = compute_er(both, d)
    parts = []
    for x in attrs:
        one = _with_attrs({x: attrs[x]}, {x: both.customers[0].beta_attrs[x]})
        dd = dataclasses.replace(d, instance_digest=one.digest())
        parts.append(compute_er(one, dd))
    for key, v in total.er.items():
        assert v == pytest.approx(parts[0].er[key] + parts[1].er[key])


def test_er_invariant_under_attribute_relabel():
    attrs = {"a": {0: (0.0,), 1: (1.0,), 2: (2.0,)}}
    one = _with_attrs(attrs, {"a": 0.7})
    two = _with_attrs({"z": attrs["a"]}, {"z": 0.7})
    d1 = sample_draws(one)
    d2 = dataclasses.replace(d1, v_attr_o={(n, "z", r): v for (n, _, r), v in d1.v_attr_o.items()},
                             v_attr={(n, "z", k, r): v for (n, _, k, r), v in d1.v_attr.items()})
    assert compute_er(one, d1).er == compute_er(two, d2).er


def test_er_nonnegative_with_positive_draws():
    for seed in range(10):
        inst = random_instance(random.Random(seed))
        assert min(compute_er(inst, sample_draws(inst)).er.values(), default=0.0) >= 0


def test_bound_examples():
    inst = synth_instance(1, scenario_count=1)
    d = sample_draws(inst)
    d.v_o[(1, 0)], d.v[(1, 0)] = 0.3, 0.1
    b = derive_bounds(inst, d, compute_er(inst, d))
    # pair (i=2, j=1): p_j - p_i ranges over [1 - 4.5, 4.5 - 1]
    assert b.mm[(2, 1, 1, 0)] == pytest.approx(3.6)
    assert b.ll[(2, 1, 1, 0)] == pytest.approx(-3.4)
    assert b.M_pair[(2, 1, 1, 0)] == pytest.approx(7.0)


@given(small_instances(), st.integers(0, 2**32 - 1))
def test_bounds_contain_every_attainable_regret(inst, salt):
    d = sample_draws(inst)
    er = compute_er(inst, d)
    b = derive_bounds(inst, d, er)
    rng = random.Random(salt)
    for (i, j, n, r), mm in b.mm.items():
        ll = b.ll[(i, j, n, r)]
        assert ll <= mm and b.M_pair[(i, j, n, r)] >= 0
        grid = lambda a: [inst.price(a, n, None)] + [inst.price(a, n, l) for l in inst.levels(a, n)]
        for _ in range(5):
            pi, pj = rng.choice(grid(i)), rng.choice(grid(j))
            rr = max(d.v_o[(n, r)], inst.customer(n).beta_price * (pj - pi) + d.v[(n, r)])
            assert ll - 1e-12 <= rr <= mm + 1e-12
    for key, m in b.M_cust.items():
        assert m >= 0 and b.l_cust[key] <= b.m_cust[key]


def test_bounds_hold_for_positive_price_taste():
    inst = synth_instance(1, scenario_count=2)
    inst = dataclasses.replace(inst, customers=(dataclasses.replace(inst.customers[0], beta_price=0.8),))
    d = sample_draws(inst)
    b = derive_bounds(inst, d, compute_er(inst, d))
    for (i, j, n, r), mm in b.mm.items():
        for pi in (inst.lp(i, n), inst.max_price(i, n)):
            for pj in (inst.lp(j, n), inst.max_price(j, n)):
                rr = max(d.v_o[(n, r)], 0.8 * (pj - pi) + d.v[(n, r)])
                assert b.ll[(i, j, n, r)] <= rr <= mm


def test_dominance_draws_force_ties():
    inst = synth_instance(3)
    d = dominance_draws(inst)
    assert set(d.v_o.values()) == {10.0} and set(d.v.values()) == {0.1}
    assert d.instance_digest == inst.digest()

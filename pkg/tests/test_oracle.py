import dataclasses
import random

import pytest
from hypothesis import given, strategies as st

from rrmprice.builders import build_model
from rrmprice.instance import Alternative, check, synth_instance
from rrmprice.oracle import (SearchSpaceTooLarge, SupplierPlan, brute_force_optimize, oracle_optimize,
                             plan_cardinality, simulate_choices)
from rrmprice.solver import solve
from rrmprice.stochastic import compute_er, dominance_draws, sample_draws
from strategies import random_instance, small_instances, synth_small


def inputs(inst, draws=None):
    d = draws or sample_draws(inst)
    return inst, d, compute_er(inst, d)


def test_capacity_one_blocks_second_customer():
    inst, d, er = inputs(synth_instance(2, (1, None), scenario_count=1), None)
    d = dominance_draws(inst)
    plan = SupplierPlan({(1, 1): 7, (1, 2): 7, (2, 1): None, (2, 2): None})
    out = simulate_choices(plan, inst, d, er)
    assert out.chosen[(1, 0)] == 1
    assert not out.available[(1, 2, 0)]
    assert out.chosen[(2, 0)] == 2
    assert out.avg_revenue == pytest.approx(5.5)


def test_forced_tie_goes_to_paid_alternative():
    inst, _, er = inputs(synth_instance(1, scenario_count=1))
    d = dominance_draws(inst)
    out = simulate_choices(SupplierPlan({(1, 1): 3, (2, 1): 3}), inst, d, er, mode="uncap")
    assert out.chosen[(1, 0)] == 2 and out.avg_revenue == pytest.approx(2.5)


def test_rum_zero_draws_opt_out():
    inst, d, er = inputs(synth_instance(3, scenario_count=2))
    for key in d.v_util:
        d.v_util[key] = 0.0
    out = simulate_choices(SupplierPlan(), inst, d, er, behavior="rum", mode="uncap")
    assert set(out.chosen.values()) == {0} and out.avg_revenue == 0.0


def test_single_customer_dominance_sells_at_top():
    inst = synth_instance(1)
    val, plan = oracle_optimize(*inputs(inst, dominance_draws(inst)))
    assert val == pytest.approx(4.5)


def test_small_noise_prices_everyone_out():
    inst = synth_instance(1)
    d = dominance_draws(inst, v_o=0.01, v=0.01)
    assert oracle_optimize(*inputs(inst, d))[0] == pytest.approx(0.0)


def test_eleven_customer_dominance():
    inst = synth_instance(11, (5, 5))
    args = inputs(inst, dominance_draws(inst))
    assert oracle_optimize(*args, mode="cap")[0] == pytest.approx(45.0)
    assert oracle_optimize(*args, mode="uncap")[0] == pytest.approx(49.5)


def test_search_guard():
    inst = synth_instance(4, (1, 1))
    with pytest.raises(SearchSpaceTooLarge) as ei:
        oracle_optimize(*inputs(inst), mode="cap", max_work=100)
    assert ei.value.limit == 100
    assert plan_cardinality(inst, "cap") == 9 ** 8
    assert plan_cardinality(inst, "uncap") == 8 ** 8


def test_optimal_plan_reproduces_value():
    for seed in range(10):
        inst = random_instance(random.Random(seed), 3, 2, 3)
        args = inputs(inst)
        val, plan = oracle_optimize(*args)
        assert simulate_choices(plan, *args, mode="uncap").avg_revenue == pytest.approx(val)


@pytest.mark.parametrize("mode, behavior", [("uncap", "rrm"), ("cap", "rrm"), ("uncap", "rum")])
def test_dynamic_program_matches_enumeration(mode, behavior):
    rng = random.Random(17)
    for _ in range(8):
        caps = (rng.randint(0, 2), rng.randint(0, 2)) if mode == "cap" else None
        inst = random_instance(rng, 3, 2, 2, caps)
        args = inputs(inst)
        assert oracle_optimize(*args, mode=mode, behavior=behavior)[0] == pytest.approx(
            brute_force_optimize(*args, mode=mode, behavior=behavior), abs=1e-9)


@pytest.mark.parametrize("kind, mode, behavior", [
    ("rrm-uncap", "uncap", "rrm"), ("rrm-cap", "cap", "rrm"), ("rum", "uncap", "rum")])
@given(inst=small_instances(n_max=3, r_max=2, l_max=2, capacitated=True))
def test_milp_matches_oracle(kind, mode, behavior, inst):
    args = inputs(inst)
    want = oracle_optimize(*args, mode=mode, behavior=behavior)[0]
    assert solve(build_model(kind, *args)).objective == pytest.approx(want, abs=1e-6)


@given(inst=small_instances(n_max=4, r_max=2), perm_seed=st.integers(0, 1000))
def test_unbounded_capacity_is_order_free(inst, perm_seed):
    args = inputs(inst)
    plan = oracle_optimize(*args)[1]
    ranks = [c.priority_rank for c in inst.customers]
    random.Random(perm_seed).shuffle(ranks)
    shuffled = check(dataclasses.replace(inst, customers=tuple(
        dataclasses.replace(c, priority_rank=k) for c, k in zip(inst.customers, ranks))))
    a = simulate_choices(plan, *args, mode="cap")
    b = simulate_choices(plan, shuffled, args[1], args[2], mode="cap")
    assert a.chosen == b.chosen


def _enlarged(inst):
    alts = tuple(a if a.id == 0 or a.capacity is None else Alternative(a.id, a.capacity + 1, a.attributes)
                 for a in inst.alternatives)
    return check(dataclasses.replace(inst, alternatives=alts))


@given(inst=small_instances(n_max=4, r_max=2, l_max=2, capacitated=True))
def test_more_capacity_never_hurts(inst):
    big = _enlarged(inst)
    d = sample_draws(inst)
    er = compute_er(inst, d)
    d2 = dataclasses.replace(d, instance_digest=big.digest())
    er2 = dataclasses.replace(er, instance_digest=big.digest())
    assert oracle_optimize(big, d2, er2, "cap")[0] >= oracle_optimize(inst, d, er, "cap")[0] - 1e-9


def test_capacity_limit_never_helps_without_attributes():
    rng = random.Random(23)
    for _ in range(30):
        inst = synth_small(rng, (rng.randint(0, 2), rng.randint(0, 2)))
        args = inputs(inst)
        assert oracle_optimize(*args, mode="cap")[0] <= oracle_optimize(*args, mode="uncap")[0] + 1e-9


def test_withholding_can_raise_revenue():
    # with attribute regret, dropping an alternative lowers the regret of another
    inst = random_instance(random.Random(1), 3, 2, 2, (1, 1))
    args = inputs(inst)
    cap, plan = oracle_optimize(*args, mode="cap")
    assert cap > oracle_optimize(*args, mode="uncap")[0] + 1e-9
    assert not all(plan.offer.values())
    assert solve(build_model("rrm-cap", *args)).objective == pytest.approx(cap, abs=1e-6)

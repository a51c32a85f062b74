import dataclasses
import json
import random

import pytest
from hypothesis import given

from rrmprice.instance import (Alternative, Customer, Instance, InstanceParseError, InvalidInstanceError,
                               PriceGrid, load, save, synth_instance, to_dict, validate)
from strategies import random_instance, small_instances


def codes(inst):
    return [v.code for v in validate(inst)]


def test_synthetic_family_is_valid():
    inst = synth_instance(10)
    assert validate(inst) == []
    assert inst.n_customers == 10
    assert inst.alternative_ids == [0, 1, 2]
    assert inst.scenario_count == 4
    assert all(c.beta_price == -1.0 for c in inst.customers)
    assert inst.attribute_names == []


def test_default_grid_spans_one_to_four_and_a_half():
    inst = synth_instance(1)
    prices = [inst.price(1, 1, None)] + [inst.price(1, 1, l) for l in inst.levels(1, 1)]
    assert prices == [1.0 + 0.5 * k for k in range(8)]
    assert inst.max_price(1, 1) == 4.5


def test_capacities_of_synthetic_family():
    assert synth_instance(11, (5, 5)).capacity(1) == 5
    inst = synth_instance(10)
    assert inst.capacity(1) is None and inst.capacity(2) is None
    assert synth_instance(1, (0, 0)).capacity(2) == 0


def test_inverted_price_bounds_reported():
    inst = synth_instance(1)
    g = inst.price_grid
    lp = dict(g.lp)
    mp = dict(g.mp)
    lp[(1, 1)], mp[(1, 1)] = 2.0, 1.0
    bad = dataclasses.replace(inst, price_grid=dataclasses.replace(g, lp=lp, mp=mp))
    viol = validate(bad)
    assert [(v.code, v.where) for v in viol] == [("price-bounds-inverted", (1, 1))]


def test_missing_opt_out_reported():
    inst = synth_instance(1)
    bad = dataclasses.replace(inst, alternatives=inst.alternatives[1:])
    assert "missing-opt-out" in codes(bad)


@pytest.mark.parametrize("mutate, code", [
    (lambda i: dataclasses.replace(i, scenario_count=0), "scenario-count"),
    (lambda i: dataclasses.replace(i, seed=-1), "seed-range"),
    (lambda i: dataclasses.replace(i, customers=(dataclasses.replace(i.customers[0], priority_rank=3),)),
     "priority-not-permutation"),
    (lambda i: dataclasses.replace(i, customers=(dataclasses.replace(i.customers[0], choice_set=frozenset({1})),)),
     "choice-set-missing-opt-out"),
    (lambda i: dataclasses.replace(i, customers=(dataclasses.replace(i.customers[0], choice_set=frozenset({0, 7})),)),
     "choice-set-unknown-alternative"),
    (lambda i: dataclasses.replace(i, alternatives=(Alternative(0, 3), *i.alternatives[1:])), "opt-out-capacity"),
    (lambda i: dataclasses.replace(i, alternatives=(i.alternatives[0], Alternative(1, -1), i.alternatives[2])),
     "negative-capacity"),
    (lambda i: dataclasses.replace(i, price_grid=dataclasses.replace(i.price_grid, pm=0.0)), "pm-nonpositive"),
    (lambda i: dataclasses.replace(i, price_grid=dataclasses.replace(i.price_grid, levels=(2, 1))), "levels-invalid"),
    (lambda i: dataclasses.replace(i, customers=()), "no-customers"),
])
def test_violation_codes(mutate, code):
    assert code in codes(mutate(synth_instance(1)))


def test_choice_set_always_contains_opt_out():
    inst = synth_instance(2)
    c = dataclasses.replace(inst.customers[0], choice_set=frozenset({0, 2}))
    inst = dataclasses.replace(inst, customers=(c, inst.customers[1]))
    assert inst.choice_set(1) == [0, 2]
    assert inst.choice_set(2) == [0, 1, 2]


def test_levels_above_upper_bound_are_pruned():
    inst = synth_instance(1)
    mp = dict(inst.price_grid.mp)
    mp[(1, 1)] = 2.6
    inst = dataclasses.replace(inst, price_grid=dataclasses.replace(inst.price_grid, mp=mp))
    assert inst.levels(1, 1) == [1, 2, 3]
    assert inst.levels(2, 1) == list(range(1, 8))
    assert inst.levels(0, 1) == []


def test_priority_order():
    inst = synth_instance(3)
    custs = tuple(dataclasses.replace(c, priority_rank=r) for c, r in zip(inst.customers, (3, 1, 2)))
    inst = dataclasses.replace(inst, customers=custs)
    assert [c.id for c in inst.customers_in_order()] == [2, 3, 1]


def test_round_trip_is_byte_stable():
    text = save(synth_instance(3, (1, None), seed=9))
    assert save(load(text)) == text
    assert load(text) == load(save(load(text)))


@given(small_instances(capacitated=True))
def test_round_trip_property(inst):
    text = save(inst)
    back = load(text)
    assert save(back) == text
    assert back.digest() == inst.digest()


def test_six_level_fixture_cardinalities():
    d = to_dict(synth_instance(10))
    d["price"]["levels"] = [1, 2, 3, 4, 5, 6]
    inst = load(json.dumps(d))
    assert (inst.n_customers, len(inst.alternatives), inst.scenario_count) == (10, 3, 4)
    assert inst.levels(1, 1) == [1, 2, 3, 4, 5, 6]


def test_missing_seed_names_field():
    d = to_dict(synth_instance(1))
    del d["scenarios"]["seed"]
    with pytest.raises(InstanceParseError, match="seed") as ei:
        load(json.dumps(d))
    assert ei.value.field == "scenarios.seed"


def test_malformed_json_has_line():
    with pytest.raises(InstanceParseError) as ei:
        load('{\n "customers": [,]\n}')
    assert ei.value.line == 2


def test_load_reports_violations():
    d = to_dict(synth_instance(1))
    d["scenarios"]["count"] = 0
    with pytest.raises(InvalidInstanceError) as ei:
        load(json.dumps(d))
    assert [v.code for v in ei.value.violations] == ["scenario-count"]


def test_canonical_form_sorted_keys():
    text = save(synth_instance(1))
    keys = list(json.loads(text))
    assert keys == sorted(keys)


def test_heterogeneous_instances_validate():
    for seed in range(20):
        assert validate(random_instance(random.Random(seed))) == []


def test_digest_tracks_content():
    a = synth_instance(2, seed=1)
    assert a.digest() == synth_instance(2, seed=1).digest()
    assert a.digest() != synth_instance(2, seed=2).digest()

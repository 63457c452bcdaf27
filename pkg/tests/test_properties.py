import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specauction import clear
from specauction.benchmarks import MechanismId, get_mechanism
from specauction.core import ValidationError
from specauction.properties import (
    PropertyReport,
    audit,
    check_budget_balance,
    check_consumer_sovereignty,
    check_individual_rationality,
    manipulation_gain_search,
)

from conftest import make_instance, markets, random_instance


def test_ir_examples(single_band):
    out = clear(single_band)
    assert out.payments == {"A": 54.0}
    assert check_individual_rationality(single_band, out)
    forced = dataclasses.replace(out, payments={"A": 61.0})
    assert not check_individual_rationality(single_band, forced)
    loser_pays = dataclasses.replace(out, payments={"A": 54.0, "B": 1.0})
    assert not check_individual_rationality(single_band, loser_pays)
    none = dataclasses.replace(out, winners=(), payments={}, values={})
    assert check_individual_rationality(single_band, none)


def test_bb_examples(single_band):
    out = clear(single_band)
    assert check_budget_balance(single_band, out)
    assert not check_budget_balance(single_band, dataclasses.replace(out, payments={"A": 10.0}, seller_revenue=20.0))
    empty = dataclasses.replace(out, winners=(), payments={}, seller_revenue=0.0)
    assert check_budget_balance(single_band, empty)


def test_mismatched_outcome_is_rejected(single_band):
    out = dataclasses.replace(clear(single_band), payments={"Z": 1.0})
    with pytest.raises(ValidationError):
        check_budget_balance(single_band, out)


def test_consumer_sovereignty_is_diagnostic():
    # One buyer is the whole market: its bid exceeds the realised welfare
    # (reserve cost is netted out), yet nothing is wrong.
    inst = make_instance((1,), (10,), 1.0, [("A", (5,), (0,), 20.0)])
    out = clear(inst)
    assert not check_consumer_sovereignty(inst, out)
    report = audit([(inst, out)])
    assert report.ok and report.scs_exceptions == 1


def test_manipulation_upward_raise_gains_nothing(single_band):
    assert manipulation_gain_search(single_band, "A", price_grid=(1.1, 1.25)) == 0.0


def test_manipulation_loser_below_reserve_gains_nothing():
    inst = make_instance((1,), (20,), 5.0, [("W", (4,), (0,), 40.0), ("L", (4,), (0,), 12.0)])
    assert manipulation_gain_search(inst, "L", price_grid=(0.5, 0.8, 0.9, 1.1, 1.25)) == 0.0


def test_manipulation_grid_validation(single_band):
    with pytest.raises(ValidationError):
        manipulation_gain_search(single_band, "A", price_grid=(0.0,))


def test_manipulation_gain_distribution_summary():
    rng = np.random.default_rng(5)
    report = PropertyReport()
    for _ in range(30):
        inst = random_instance(rng, 8, k=3)
        for b in inst.buyer_ids:
            g = manipulation_gain_search(inst, b)
            assert math.isfinite(g)
            part = PropertyReport(manipulation_samples=1, max_manipulation_gain=g, manipulation_gains=[g])
            report.merge(part)
    d = report.to_dict()
    assert d["manipulation_samples"] == 240
    assert sum(d["manipulation_gain_histogram"]["counts"]) == 240
    assert d["max_manipulation_gain"] == max(report.manipulation_gains)


def test_report_merge():
    a = PropertyReport(instances_checked=3, ir_violations=1)
    b = PropertyReport(instances_checked=2, bb_violations=2, manipulation_samples=1,
                       max_manipulation_gain=-0.5, manipulation_gains=[-0.5])
    a.merge(b)
    assert (a.instances_checked, a.ir_violations, a.bb_violations) == (5, 1, 2)
    assert a.max_manipulation_gain == -0.5 and not a.ok


@settings(max_examples=150, deadline=None)
@given(markets(max_buyers=6), st.sampled_from(list(MechanismId)))
def test_audit_passes_on_mechanism_outcomes(inst, mid):
    report = audit([(inst, get_mechanism(mid)(inst))])
    assert report.ok and report.instances_checked == 1


@settings(max_examples=100, deadline=None)
@given(markets(max_buyers=6))
def test_upward_misreport_preserving_order_is_neutral(inst):
    base = clear(inst)
    order = inst.arrays.order.tolist()
    for w in base.winners:
        bid = inst.bid(w)
        for c in (1.1, 1.5, 2.0):
            lie = inst.replace_bid(bid.with_price(bid.price * c))
            if lie.arrays.order.tolist() != order:
                continue
            out = clear(lie)
            true_utility = bid.price - out.payments[w]
            assert math.isclose(true_utility, base.utility(w), rel_tol=1e-9, abs_tol=1e-9)

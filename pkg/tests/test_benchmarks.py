import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from specauction import Instance, clear
from specauction.benchmarks import (
    MechanismId,
    clear_tcda,
    clear_thimble,
    get_mechanism,
    tcda_clear_arrays,
    thimble_clear_arrays,
    virtual_bids,
)
from specauction.core import ValidationError
from specauction.gmwd import greedy_clear_arrays
from specauction.oracle import solve_exact
from specauction.properties import check_budget_balance, check_individual_rationality

from conftest import make_instance, markets


def _rigid(inst):
    return Instance(inst.sem, inst.ask, tuple(b.with_adjust((0,) * b.num_bands) for b in inst.bids))


def _flexible(inst):
    return Instance(inst.sem, inst.ask, tuple(b.with_adjust(b.base_demand) for b in inst.bids))


def test_virtual_bid_construction():
    assert virtual_bids(12.0, 24.0, 3) == [(4.0, 8.0), (8.0, 16.0), (12.0, 24.0)]
    assert virtual_bids(7.5, 15.0, 1) == [(7.5, 15.0)]
    # partial splits round up to whole units, the full bid keeps the exact total
    assert [u for u, _ in virtual_bids(10.0, 5.0, 3)] == [4.0, 7.0, 10.0]
    with pytest.raises(ValidationError):
        virtual_bids(1.0, 1.0, 0)


def test_tcda_rejects_what_substitution_admits():
    inst = make_instance((2, 1), (2, 4), 0.0,
                         [("A", (3, 0), (2, 0), 12.0), ("B", (0, 4), (0, 0), 4.0)])
    g, t = clear(inst), clear_tcda(inst)
    assert "A" in g.winners
    assert t.winners == ()
    assert g.social_welfare > t.social_welfare


def test_empty_bids():
    inst = make_instance((1, 2), (3, 3), 1.0, [])
    for mid in MechanismId:
        out = get_mechanism(mid)(inst)
        assert out.winners == () and out.social_welfare == 0.0 and out.seller_revenue == 0.0


def test_mechanism_id_parse():
    assert MechanismId.parse("thimble") is MechanismId.THIMBLE
    assert MechanismId.parse("THIMBLE-approx") is MechanismId.THIMBLE
    assert MechanismId.parse(" gmwd ") is MechanismId.GMWD
    with pytest.raises(ValidationError):
        MechanismId.parse("vcg")


def test_thimble_wins_where_bands_bind():
    # Band 1 is too small for A's rigid package, but the equivalent total fits.
    inst = make_instance((1, 1), (2, 10), 0.0, [("A", (4, 0), (0, 0), 40.0)])
    assert clear(inst).social_welfare == 0.0
    th = clear_thimble(inst)
    assert th.winners == ("A",) and th.social_welfare == 40.0
    assert th.social_welfare == solve_exact(_flexible(inst)).optimal_welfare
    assert sum(a for a in th.allocation["A"]) == 4.0


def test_thimble_partial_fill():
    inst = make_instance((1,), (9,), 0.0, [("A", (6,), (0,), 60.0), ("B", (6,), (0,), 48.0)])
    out = clear_thimble(inst)
    # A takes its full 6 units; of B's splits (6, 4, 2) only 2 units fit.
    assert out.winners == ("A", "B")
    assert out.values == {"A": 60.0, "B": 16.0}
    assert out.allocation == {"A": (6.0,), "B": (2.0,)}
    assert out.payments == {"A": 0.0, "B": 0.0}


@settings(max_examples=300, deadline=None)
@given(markets(), st.sampled_from(["break", "skip"]))
def test_tcda_is_gmwd_without_adjustment(inst, policy):
    a, b = clear_tcda(inst, policy), clear(_rigid(inst), policy)
    assert a.winners == b.winners
    assert a.payments == b.payments
    assert a.social_welfare == b.social_welfare and a.seller_revenue == b.seller_revenue
    ra = tcda_clear_arrays(inst.arrays, policy)
    assert ra.social_welfare == a.social_welfare


@settings(max_examples=300, deadline=None)
@given(markets(), st.sampled_from(["break", "skip"]))
def test_single_virtual_bid_is_gmwd_without_band_limits(inst, policy):
    flex = _flexible(inst)
    g = clear(flex, policy)
    t = clear_thimble(inst, num_virtual=1, policy=policy)
    assert t.winners == g.winners
    assert t.social_welfare == g.social_welfare
    for w in g.winners:
        assert math.isclose(t.payments[w], g.payments[w], rel_tol=1e-12, abs_tol=1e-12)


@settings(max_examples=300, deadline=None)
@given(markets(), st.integers(1, 5), st.sampled_from(["break", "skip"]))
def test_thimble_invariants(inst, n, policy):
    res = thimble_clear_arrays(inst.arrays, n, policy)
    assert len(set(res.winners.tolist())) == len(res.winners)
    assert res.units.sum() <= inst.arrays.eq_supply * (1 + 1e-9) + 1e-9
    out = clear_thimble(inst, n, policy)
    assert check_individual_rationality(inst, out)
    assert check_budget_balance(inst, out)
    for w, alloc in out.allocation.items():
        granted = sum(a * r for a, r in zip(alloc, inst.sem.rho))
        assert math.isclose(granted, res.units[out.winners.index(w)], rel_tol=1e-9, abs_tol=1e-6)
    band = np.sum([a for a in out.allocation.values()], axis=0) if out.allocation else 0
    assert np.all(band <= np.asarray(inst.ask.supply) + 1e-6)


@settings(max_examples=200, deadline=None)
@given(markets(), st.sampled_from(list(MechanismId)), st.sampled_from(["break", "skip"]))
def test_all_mechanisms_ir_bb(inst, mid, policy):
    out = get_mechanism(mid, policy=policy)(inst)
    assert check_individual_rationality(inst, out)
    assert check_budget_balance(inst, out)


@settings(max_examples=100, deadline=None)
@given(markets())
def test_array_path_matches_object_path(inst):
    g = greedy_clear_arrays(inst.arrays)
    assert g.social_welfare == clear(inst).social_welfare
    t = thimble_clear_arrays(inst.arrays)
    assert t.social_welfare == clear_thimble(inst).social_welfare

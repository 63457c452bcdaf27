import math

import pytest
from hypothesis import given, strategies as st

from specauction import (
    Ask,
    Bid,
    DimensionError,
    Instance,
    SemCoefficients,
    UndefinedPriceError,
    ValidationError,
    equivalent_demand,
    equivalent_price,
    rank_buyers,
)

from conftest import make_instance, markets

RHO5 = SemCoefficients((10, 8, 6, 4, 2))


def test_equivalent_demand_examples():
    assert equivalent_demand(Bid(1, (2, 1, 0, 0, 0), (0,) * 5, 1.0), RHO5) == 28
    assert equivalent_demand(Bid(1, (1, 0), (0, 0), 1.0), SemCoefficients((1, 1))) == 1


def test_all_zero_demand_is_undefined():
    with pytest.raises(UndefinedPriceError):
        Bid(1, (0, 0, 0, 0, 0), (0,) * 5, 1.0)


def test_dimension_mismatch():
    with pytest.raises(DimensionError, match="dimension mismatch"):
        equivalent_demand(Bid(1, (1, 2), (0, 0), 1.0), RHO5)
    with pytest.raises(DimensionError):
        Instance(SemCoefficients((1, 1)), Ask((3,), 0.0), ())


def test_equivalent_price_examples():
    assert equivalent_price(Bid(1, (2, 1, 0, 0, 0), (0,) * 5, 100.0), RHO5) == pytest.approx(100 / 28)
    assert equivalent_price(Bid(1, (1,), (0,), 0.0), SemCoefficients((5,))) == 0.0
    assert equivalent_price(Bid(1, (2, 1, 0, 0, 0), (0,) * 5, 28.0), RHO5) == 1.0


def _ranked_ids(prices, ids):
    inst = make_instance((1,), (10,), 0.0, [(i, (1,), (0,), p) for i, p in zip(ids, prices)])
    return [r.buyer_id for r in rank_buyers(inst)]


def test_rank_examples():
    assert _ranked_ids([3.0, 5.0, 4.0], [1, 2, 3]) == [2, 3, 1]
    assert _ranked_ids([2.0, 2.0], [7, 3]) == [3, 7]
    (only,) = rank_buyers(make_instance((1,), (1,), 0.0, [("x", (2,), (0,), 4.0)]))
    assert only.rank == 1 and only.equivalent_price == 2.0 and only.equivalent_demand == 2.0


def test_bid_invariants():
    with pytest.raises(ValidationError):
        Bid(1, (2, 1), (3, 0), 1.0)  # adjustable beyond requested
    with pytest.raises(ValidationError):
        Bid(1, (2, 1), (0, 0), -1.0)
    with pytest.raises(ValidationError):
        Bid(1, (1.5, 1), (0, 0), 1.0)
    with pytest.raises(ValidationError):
        SemCoefficients((1.0, 0.0))
    with pytest.raises(ValidationError):
        make_instance((1,), (3,), 0.0, [(1, (1,), (0,), 1.0), (1, (2,), (0,), 1.0)])


@given(markets())
def test_rank_is_sorted_permutation(inst):
    ranked = rank_buyers(inst)
    assert sorted(r.buyer_id for r in ranked) == sorted(inst.buyer_ids)
    assert [r.rank for r in ranked] == list(range(1, inst.num_buyers + 1))
    for a, b in zip(ranked, ranked[1:]):
        assert a.equivalent_price > b.equivalent_price or (
            a.equivalent_price == b.equivalent_price and a.buyer_id < b.buyer_id
        )
    for r in ranked:
        bid = inst.bid(r.buyer_id)
        assert math.isclose(r.equivalent_price * r.equivalent_demand, bid.price, rel_tol=1e-9, abs_tol=1e-12)


@given(markets(), st.floats(0.1, 10.0))
def test_price_homogeneous_degree_one(inst, c):
    for bid in inst.bids:
        scaled = bid.with_price(bid.price * c)
        assert math.isclose(
            equivalent_price(scaled, inst.sem), c * equivalent_price(bid, inst.sem),
            rel_tol=1e-12, abs_tol=1e-300,
        )


@given(markets(integer_rho=True), st.sampled_from([2.0, 4.0, 0.5, 0.25]))
def test_common_rho_reserve_scaling_keeps_order(inst, c):
    # Power-of-two factors keep the arithmetic exact, so ties stay ties.
    scaled = Instance(inst.sem.scaled(c), Ask(inst.ask.supply, inst.ask.reserve / c), inst.bids)
    assert [r.buyer_id for r in rank_buyers(inst)] == [r.buyer_id for r in rank_buyers(scaled)]

"""Flexible-bidding combinatorial spectrum auctions: GMWD clearing,
benchmarks, an exact oracle and a Monte Carlo harness."""
from .benchmarks import MechanismId, clear_tcda, clear_thimble, get_mechanism
from .core import (
    Ask,
    AuctionError,
    Bid,
    DimensionError,
    Instance,
    RankedBuyer,
    SemCoefficients,
    UndefinedPriceError,
    ValidationError,
    equivalent_demand,
    equivalent_price,
    rank_buyers,
)
from .gmwd import AuctionOutcome, GmwdState, clear, determine_payments, realize_allocation, run_gmwd
from .kernels import BACKEND
from .oracle import OracleResult, solve_exact

__version__ = "0.1.0"

__all__ = [
    "Ask", "AuctionError", "AuctionOutcome", "BACKEND", "Bid", "DimensionError",
    "GmwdState", "Instance", "MechanismId", "OracleResult", "RankedBuyer",
    "SemCoefficients", "UndefinedPriceError", "ValidationError", "clear",
    "clear_tcda", "clear_thimble", "determine_payments", "equivalent_demand",
    "equivalent_price", "get_mechanism", "rank_buyers", "realize_allocation",
    "run_gmwd", "solve_exact",
]

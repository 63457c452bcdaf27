"""Pure-Python versions of the hot loops.

Behaviour must match ``_ckernels.pyx`` exactly; the test suite runs both
backends on the same random markets and compares results bit for bit.
"""
from __future__ import annotations

import math

import numpy as np


def greedy_select(order, net, eqd, eqp, supply, eq_supply, reserve, skip, tol):
    """Scan buyers in ``order`` and commit those that fit.

    Returns ``(selected, band_left, eq_left, last_pos)`` where ``last_pos``
    is the position in ``order`` of the lowest-ranked winner, or -1.
    """
    order = order.tolist()
    net = net.tolist()
    eqd = eqd.tolist()
    eqp = eqp.tolist()
    band_left = supply.tolist()
    k = len(band_left)
    eq_left = float(eq_supply)
    selected = np.zeros(len(order), dtype=np.uint8)
    last_pos = -1
    for pos, i in enumerate(order):
        if eqp[i] < reserve:
            break
        row = net[i]
        eq_next = eq_left - eqd[i]
        fits = eq_next >= -tol
        if fits:
            for j in range(k):
                if band_left[j] - row[j] < 0:
                    fits = False
                    break
        if not fits:
            if skip:
                continue
            break
        for j in range(k):
            band_left[j] -= row[j]
        eq_left = eq_next
        selected[i] = 1
        last_pos = pos
    return selected, np.asarray(band_left, dtype=np.int64), eq_left, last_pos


def _lex_less(a: int, b: int) -> bool:
    """True if the sorted index tuple of bitmask ``a`` precedes that of ``b``."""
    d = a ^ b
    if d == 0:
        return False
    low = d & -d
    if a & low:
        # a holds the first differing element; b continues with a larger
        # element unless it has run out, in which case b is a prefix of a.
        return (b & ~(2 * low - 1)) != 0
    return (a & ~(2 * low - 1)) == 0


def subset_search(values, net, eqd, ids, supply, eq_supply, tol):
    """Branch and bound for the welfare-maximising feasible subset.

    Items arrive in search order (density descending) with positive
    ``values``. ``ids`` gives each item's rank in buyer-id order, used for
    the lexicographic tie-break. Float sums only steer the search; any two
    subsets whose sums land within rounding distance are compared exactly,
    so the result is the true optimum of the summed ``values``. Returns ``(best_value, best_mask)`` with
    the mask over id ranks.
    """
    values = values.tolist()
    net = net.tolist()
    eqd = eqd.tolist()
    ids = ids.tolist()
    band_left = supply.tolist()
    n = len(values)
    k = len(band_left)
    best = [0.0, 0]
    by_id = dict(zip(ids, values))

    def exact_cmp(a: int, b: int) -> int:
        # fsum is correctly rounded, so its sign is the sign of the exact sum.
        d = a ^ b
        total = math.fsum(by_id[i] if (a >> i) & 1 else -by_id[i]
                          for i in range(d.bit_length()) if (d >> i) & 1)
        return (total > 0) - (total < 0)

    def bound(start: int, value: float, cap: float) -> float:
        for t in range(start, n):
            if eqd[t] <= cap:
                cap -= eqd[t]
                value += values[t]
            else:
                return value + values[t] * (cap / eqd[t])
        return value

    def visit(t: int, value: float, cap: float, mask: int) -> None:
        eps = 1e-12 * max(1.0, abs(best[0]))
        if value > best[0] + eps:
            best[0], best[1] = value, mask
        elif value >= best[0] - eps and mask != best[1]:
            c = exact_cmp(mask, best[1])
            if c > 0 or (c == 0 and _lex_less(mask, best[1])):
                best[0], best[1] = value, mask
        if t == n:
            return
        if bound(t, value, cap + tol) < best[0] - eps:
            return
        row = net[t]
        if cap - eqd[t] >= -tol and all(band_left[j] >= row[j] for j in range(k)):
            for j in range(k):
                band_left[j] -= row[j]
            visit(t + 1, value + values[t], cap - eqd[t], mask | (1 << ids[t]))
            for j in range(k):
                band_left[j] += row[j]
        visit(t + 1, value, cap, mask)

    visit(0, 0.0, float(eq_supply), 0)
    return best[0], best[1]

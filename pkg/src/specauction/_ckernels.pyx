# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: the greedy winner scan and the exact subset search.

Semantics mirror ``_pykernels`` line for line.
"""
import numpy as np

from libc.math cimport fabs
from libc.stdint cimport int64_t, uint64_t, uint8_t


def greedy_select(const int64_t[::1] order, const int64_t[:, ::1] net,
                  const double[::1] eqd, const double[::1] eqp,
                  const int64_t[::1] supply, double eq_supply, double reserve,
                  bint skip, double tol):
    cdef Py_ssize_t m = order.shape[0]
    cdef Py_ssize_t k = supply.shape[0]
    cdef Py_ssize_t pos, i, j
    cdef double eq_left = eq_supply, eq_next
    cdef bint fits
    cdef Py_ssize_t last_pos = -1
    band_left_arr = np.array(supply, dtype=np.int64)
    selected_arr = np.zeros(m, dtype=np.uint8)
    cdef int64_t[::1] band_left = band_left_arr
    cdef uint8_t[::1] selected = selected_arr
    for pos in range(m):
        i = order[pos]
        if eqp[i] < reserve:
            break
        eq_next = eq_left - eqd[i]
        fits = eq_next >= -tol
        if fits:
            for j in range(k):
                if band_left[j] - net[i, j] < 0:
                    fits = False
                    break
        if not fits:
            if skip:
                continue
            break
        for j in range(k):
            band_left[j] -= net[i, j]
        eq_left = eq_next
        selected[i] = 1
        last_pos = pos
    return selected_arr, band_left_arr, eq_left, last_pos


cdef inline bint _lex_less(uint64_t a, uint64_t b) nogil:
    cdef uint64_t d = a ^ b
    cdef uint64_t low, above
    if d == 0:
        return False
    low = d & (~d + 1)
    above = ~((low << 1) - 1) if low != (<uint64_t>1 << 63) else 0
    if a & low:
        return (b & above) != 0
    return (a & above) == 0


cdef struct Search:
    Py_ssize_t n
    Py_ssize_t k
    const double* values
    const int64_t* net
    const double* eqd
    const int64_t* ids
    int64_t* band_left
    double tol
    double best
    uint64_t best_mask
    double by_id[64]


cdef int _exact_cmp(Search* s, uint64_t a, uint64_t b) nogil:
    """Exact sign of value(a) - value(b) via a non-overlapping expansion."""
    cdef double partials[66]
    cdef int count = 0, i, j
    cdef double x, y, hi, lo
    cdef uint64_t d = a ^ b
    for i in range(64):
        if not (d >> i) & 1:
            continue
        x = s.by_id[i] if (a >> i) & 1 else -s.by_id[i]
        j = 0
        for t in range(count):
            y = partials[t]
            if fabs(x) < fabs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo != 0.0:
                partials[j] = lo
                j += 1
            x = hi
        partials[j] = x
        count = j + 1
    for i in range(count - 1, -1, -1):
        if partials[i] > 0.0:
            return 1
        if partials[i] < 0.0:
            return -1
    return 0


cdef double _bound(Search* s, Py_ssize_t start, double value, double cap) nogil:
    cdef Py_ssize_t t
    for t in range(start, s.n):
        if s.eqd[t] <= cap:
            cap -= s.eqd[t]
            value += s.values[t]
        else:
            return value + s.values[t] * (cap / s.eqd[t])
    return value


cdef void _visit(Search* s, Py_ssize_t t, double value, double cap, uint64_t mask) nogil:
    cdef double best_abs = s.best if s.best >= 0 else -s.best
    cdef double eps = 1e-12 * (best_abs if best_abs > 1.0 else 1.0)
    cdef Py_ssize_t j
    cdef bint fits
    cdef const int64_t* row
    cdef int c
    if value > s.best + eps:
        s.best = value
        s.best_mask = mask
    elif value >= s.best - eps and mask != s.best_mask:
        c = _exact_cmp(s, mask, s.best_mask)
        if c > 0 or (c == 0 and _lex_less(mask, s.best_mask)):
            s.best = value
            s.best_mask = mask
    if t == s.n:
        return
    if _bound(s, t, value, cap + s.tol) < s.best - eps:
        return
    row = s.net + t * s.k
    fits = cap - s.eqd[t] >= -s.tol
    if fits:
        for j in range(s.k):
            if s.band_left[j] < row[j]:
                fits = False
                break
    if fits:
        for j in range(s.k):
            s.band_left[j] -= row[j]
        _visit(s, t + 1, value + s.values[t], cap - s.eqd[t], mask | (<uint64_t>1 << s.ids[t]))
        for j in range(s.k):
            s.band_left[j] += row[j]
    _visit(s, t + 1, value, cap, mask)


def subset_search(const double[::1] values, const int64_t[:, ::1] net,
                  const double[::1] eqd, const int64_t[::1] ids,
                  const int64_t[::1] supply, double eq_supply, double tol):
    cdef Search s
    cdef Py_ssize_t n = values.shape[0], t
    if n > 63:
        raise ValueError("compiled subset search supports at most 63 items")
    band_left_arr = np.array(supply, dtype=np.int64)
    cdef int64_t[::1] band_left = band_left_arr
    s.n = n
    s.k = supply.shape[0]
    s.tol = tol
    s.best = 0.0
    s.best_mask = 0
    s.band_left = &band_left[0] if s.k > 0 else NULL
    if n == 0:
        return 0.0, 0
    s.values = &values[0]
    s.net = &net[0, 0]
    s.eqd = &eqd[0]
    s.ids = &ids[0]
    for t in range(64):
        s.by_id[t] = 0.0
    for t in range(n):
        s.by_id[ids[t]] = values[t]
    with nogil:
        _visit(&s, 0, 0.0, eq_supply, 0)
    return s.best, int(s.best_mask)

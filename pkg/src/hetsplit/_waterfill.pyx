# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled water-filling kernel.

Same contract as hetsplit._waterfill_py.waterfill; selected at import by
hetsplit.kernels when available.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cnp.import_array()


cdef void _insertion_argsort(const double* vals, Py_ssize_t* idx, Py_ssize_t n) noexcept nogil:
    # stable, fine for the small per-sector instances the simulator produces
    cdef Py_ssize_t i, j, cur
    for i in range(n):
        idx[i] = i
    for i in range(1, n):
        cur = idx[i]
        j = i - 1
        while j >= 0 and vals[idx[j]] > vals[cur]:
            idx[j + 1] = idx[j]
            j -= 1
        idx[j + 1] = cur


def waterfill(cnp.ndarray[cnp.float64_t, ndim=1] ratios not None):
    """Allocate a unit resource over users with per-user floors `ratios`.

    Returns (alphas, level, n_active) with alphas aligned to the input order,
    alphas[k] = max(0, level - ratios[k]) and sum(alphas) == 1.
    """
    cdef Py_ssize_t n = ratios.shape[0]
    if n == 0:
        raise ValueError("waterfill: empty input")

    cdef cnp.ndarray[cnp.float64_t, ndim=1] alphas = np.zeros(n, dtype=np.float64)
    cdef double[::1] rv = np.ascontiguousarray(ratios)
    cdef double[::1] av = alphas
    cdef cnp.ndarray[cnp.int64_t, ndim=1] order_np

    cdef Py_ssize_t* order = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef double* pref = <double*> malloc(n * sizeof(double))
    if order == NULL or pref == NULL:
        free(order)
        free(pref)
        raise MemoryError()

    cdef Py_ssize_t i, n_active
    cdef double acc, level

    try:
        if n <= 64:
            with nogil:
                _insertion_argsort(&rv[0], order, n)
        else:
            order_np = np.argsort(ratios).astype(np.int64, copy=False)
            for i in range(n):
                order[i] = order_np[i]

        with nogil:
            acc = 0.0
            for i in range(n):
                acc += rv[order[i]]
                pref[i] = acc
            n_active = n
            level = (pref[n - 1] + 1.0) / n
            # drop the highest-floor user while their share would be
            # non-positive; the lowest floor always clears (level >= floor + 1/N)
            while n_active > 1 and level - rv[order[n_active - 1]] <= 0.0:
                n_active -= 1
                level = (pref[n_active - 1] + 1.0) / n_active
            for i in range(n_active):
                av[order[i]] = level - rv[order[i]]
    finally:
        free(order)
        free(pref)

    return alphas, level, n_active

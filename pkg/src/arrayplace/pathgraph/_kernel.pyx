# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled best-path search.  Mirrors ``_pure.best_paths_kernel`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, sqrt
from libcpp.pair cimport pair
from libcpp.queue cimport priority_queue

cnp.import_array()

ctypedef pair[double, long] entry

DIVERGED = -1


def best_paths_kernel(const cnp.int64_t[:, ::1] nbr, double axial, double diag,
                      long source, bint angular, double v_init, long max_rescales):
    cdef Py_ssize_t n = nbr.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dist_a = np.full(n, np.inf)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prev_a = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v_a = np.full(n, -np.inf)
    cdef double[::1] dist = dist_a
    cdef cnp.int64_t[::1] prev = prev_a
    cdef double[::1] v = v_a
    cdef cnp.int64_t[::1] prev_code = np.full(n, -1, dtype=np.int64)
    cdef unsigned char[::1] in_q = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] n_ax = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] n_dg = np.zeros(n, dtype=np.int64)
    cdef double lengths[8]
    cdef priority_queue[entry] heap
    cdef entry top
    cdef long i, j, code, delta, m
    cdef long rescales = 0
    cdef double vi, gamma, alt, length, run
    cdef cnp.int64_t pc

    for code in range(8):
        lengths[code] = axial if code % 2 == 0 else diag

    v[source] = v_init
    dist[source] = 0.0
    in_q[source] = 1
    heap.push(entry(v_init, -source))

    while not heap.empty():
        top = heap.top()
        heap.pop()
        i = -top.second
        if not in_q[i] or top.first != v[i]:
            continue
        in_q[i] = 0
        vi = v[i]
        pc = prev_code[i]
        for code in range(8):
            j = nbr[i, code]
            if j < 0:
                continue
            length = lengths[code]
            gamma = 1.0
            if angular and i != source:
                delta = code - pc
                if delta < 0:
                    delta = -delta
                if 8 - delta < delta:
                    delta = 8 - delta
                gamma = (4 - delta) / 4.0
            alt = gamma * vi - length
            if alt > v[j]:
                if alt < 0:
                    rescales += 1
                    if rescales > max_rescales:
                        rescales = DIVERGED
                        heap = priority_queue[entry]()
                        break
                    for m in range(n):
                        if v[m] != -INFINITY:
                            v[m] = v[m] + v_init
                    in_q[i] = 1
                    heap = priority_queue[entry]()
                    for m in range(n):
                        if in_q[m]:
                            heap.push(entry(v[m], -m))
                    break
                v[j] = alt
                prev[j] = i
                prev_code[j] = code
                n_ax[j] = n_ax[i] + (code % 2 == 0)
                n_dg[j] = n_dg[i] + (code % 2)
                in_q[j] = 1
                heap.push(entry(alt, -j))

        if rescales == DIVERGED:
            break

    for m in range(n):
        if m == source or prev[m] >= 0:
            run = n_dg[m] * axial
            dist[m] = n_ax[m] * axial + sqrt(2.0 * run * run)
    return dist_a, prev_a, v_a, rescales

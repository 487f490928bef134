"""Pure-Python best-path search, used when the compiled kernel is absent.

Must stay bit-for-bit equivalent to ``_kernel.pyx``: same extraction order
(max value, then smallest id), same neighbour order (angle code 0..7) and
the same floating-point expressions.
"""

import heapq
import math

import numpy as np

DIVERGED = -1


def rescale(v, amount):
    """Shift every finite value by ``amount`` in place."""
    for n, val in enumerate(v):
        if val != -math.inf:
            v[n] = val + amount


def path_length(n_axial, n_diagonal, spacing):
    """Length of a path with the given step counts.  Depends only on the
    counts, so equal-length paths give bit-identical results, and a pure
    diagonal run matches ``sqrt(dx*dx + dy*dy)`` exactly."""
    run = n_diagonal * spacing
    return n_axial * spacing + math.sqrt(2.0 * run * run)


def best_paths_kernel(nbr, axial, diag, source, angular, v_init, max_rescales):
    n = nbr.shape[0]
    rows = nbr.tolist()
    lengths = [axial if code % 2 == 0 else diag for code in range(8)]
    dist = [math.inf] * n
    prev = [-1] * n
    prev_code = [-1] * n
    v = [-math.inf] * n
    in_q = [False] * n
    n_ax = [0] * n
    n_dg = [0] * n

    v[source] = v_init
    dist[source] = 0.0
    in_q[source] = True
    heap = [(-v_init, source)]
    rescales = 0

    while heap:
        negv, i = heapq.heappop(heap)
        if not in_q[i] or -negv != v[i]:
            continue
        in_q[i] = False
        vi = v[i]
        pc = prev_code[i]
        for code in range(8):
            j = rows[i][code]
            if j < 0:
                continue
            length = lengths[code]
            gamma = 1.0
            if angular and i != source:
                delta = abs(code - pc)
                delta = min(delta, 8 - delta)
                gamma = (4 - delta) / 4.0
            alt = gamma * vi - length
            if alt > v[j]:
                if alt < 0:
                    rescales += 1
                    if rescales > max_rescales:
                        return dist, prev, v, DIVERGED
                    rescale(v, v_init)
                    in_q[i] = True
                    heap = [(-v[m], m) for m in range(n) if in_q[m]]
                    heapq.heapify(heap)
                    break
                v[j] = alt
                prev[j] = i
                prev_code[j] = code
                n_ax[j] = n_ax[i] + (code % 2 == 0)
                n_dg[j] = n_dg[i] + code % 2
                in_q[j] = True
                heapq.heappush(heap, (-alt, j))

    for m in range(n):
        if m == source or prev[m] >= 0:
            dist[m] = path_length(n_ax[m], n_dg[m], axial)
    return (
        np.array(dist, dtype=np.float64),
        np.array(prev, dtype=np.int64),
        np.array(v, dtype=np.float64),
        rescales,
    )

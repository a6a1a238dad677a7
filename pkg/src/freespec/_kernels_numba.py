"""Numba-compiled attention kernel (default backend).

Skips the dot product for inadmissible pairs, so banded masks cost
O(N * band * d) instead of the dense O(N^2 * d).  Rows are independent,
which keeps the prange parallelization deterministic at any thread count.

Only the 'contract' and 'reassoc' fastmath flags are enabled: they let LLVM
vectorize the accumulation loops but keep NaN/infinity semantics.  Results
may differ from the numpy kernel by a few ulp, never between runs.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True, fastmath={"contract", "reassoc"})
def attend_masked(q, k, v, scale, mask):
    n, d = q.shape
    dv = v.shape[1]
    out = np.zeros((n, dv), np.float64)
    for i in prange(n):
        logits = np.empty(n, np.float64)
        row_max = -np.inf
        for j in range(n):
            if mask[i, j]:
                acc = 0.0
                for c in range(d):
                    acc += q[i, c] * k[j, c]
                acc *= scale
                logits[j] = acc
                if acc > row_max:
                    row_max = acc
        total = 0.0
        for j in range(n):
            if mask[i, j]:
                e = np.exp(logits[j] - row_max)
                logits[j] = e
                total += e
        inv = 1.0 / total
        for j in range(n):
            if mask[i, j]:
                w = logits[j] * inv
                for c in range(dv):
                    out[i, c] += w * v[j, c]
    return out

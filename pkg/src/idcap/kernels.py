"""Hot numeric kernels: numba-compiled by default, pure numpy on request.

Set ``IDCAP_NO_NUMBA=1`` in the environment (before import) to force the
numpy fallbacks; the flag exists so the two backends can be benchmarked and
cross-checked.  Both backends run the same blocked algorithm on top of BLAS
matrix products.  Results agree except for possible last-ulp rounding
differences between BLAS code paths on exact threshold ties.

Exported kernels:

- ``scan_block(X, start, stop, cos_thr)``: first row index k in [start, stop)
  whose inner product with some earlier row j < k exceeds ``cos_thr``
  (i.e. the pair sits closer than the target angle), or -1.
- ``greedy_scan(cands, acc, n_acc, cos_thr, consec_rej, budget)``: sequential
  greedy packing acceptance over a candidate batch.
- ``first_violation(X, cos_thr)``: blocked driver over ``scan_block``.
"""

from __future__ import annotations

import os

import numpy as np

_BLOCK = 256

NUMBA_AVAILABLE = False
_numba_disabled = os.environ.get("IDCAP_NO_NUMBA", "").strip().lower() in (
    "1", "true", "yes", "on",
)
if not _numba_disabled:
    try:
        from numba import njit

        NUMBA_AVAILABLE = True
    except ImportError:  # pragma: no cover - exercised via the env flag
        NUMBA_AVAILABLE = False


def scan_block_numpy(X: np.ndarray, start: int, stop: int, cos_thr: float) -> int:
    G = X[start:stop] @ X[:stop].T
    mask = G > cos_thr
    width = stop - start
    # restrict within-block comparisons to j < k
    mask[:, start:stop] &= np.tri(width, width, -1, dtype=bool)
    hits = np.flatnonzero(mask.any(axis=1))
    if hits.size:
        return start + int(hits[0])
    return -1


def greedy_scan_numpy(cands, acc, n_acc, cos_thr, consec_rej, budget):
    for i in range(cands.shape[0]):
        if consec_rej >= budget:
            break
        c = cands[i]
        if n_acc and (acc[:n_acc] @ c > cos_thr).any():
            consec_rej += 1
        else:
            acc[n_acc] = c
            n_acc += 1
            consec_rej = 0
    return n_acc, consec_rej


if NUMBA_AVAILABLE:

    @njit(cache=True, nogil=True)
    def scan_block_numba(X, start, stop, cos_thr):  # pragma: no cover - jit
        G = np.dot(X[start:stop], X[:stop].T)
        for r in range(stop - start):
            k = start + r
            for j in range(k):
                if G[r, j] > cos_thr:
                    return k
        return -1

    @njit(cache=True, nogil=True)
    def greedy_scan_numba(cands, acc, n_acc, cos_thr, consec_rej, budget):  # pragma: no cover - jit
        dim = cands.shape[1]
        for i in range(cands.shape[0]):
            if consec_rej >= budget:
                break
            ok = True
            for j in range(n_acc):
                s = 0.0
                for d in range(dim):
                    s += acc[j, d] * cands[i, d]
                if s > cos_thr:
                    ok = False
                    break
            if ok:
                for d in range(dim):
                    acc[n_acc, d] = cands[i, d]
                n_acc += 1
                consec_rej = 0
            else:
                consec_rej += 1
        return n_acc, consec_rej

    scan_block = scan_block_numba
    greedy_scan = greedy_scan_numba
    USING_NUMBA = True
else:
    scan_block_numba = None
    greedy_scan_numba = None
    scan_block = scan_block_numpy
    greedy_scan = greedy_scan_numpy
    USING_NUMBA = False


def first_violation(X: np.ndarray, cos_thr: float, block: int = _BLOCK) -> int:
    """Smallest k with some j < k at inner product > cos_thr, else len(X).

    The result does not depend on ``block``; blocking only bounds the size of
    the BLAS products so early violations exit cheaply.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    for s in range(0, n, block):
        v = scan_block(X, s, min(s + block, n), cos_thr)
        if v >= 0:
            return v
    return n


def warmup() -> None:
    """Trigger jit compilation so timed sections never pay for it."""
    X = np.eye(3)
    scan_block(X, 0, 3, 2.0)
    acc = np.zeros((4, 3))
    greedy_scan(X, acc, 0, 2.0, 0, 10)

"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

Two kernels dominate runtime:

* ``group_terms`` — per-chromosome objective terms for a whole population of
  binary membership vectors (the inner loop of the genetic search),
* ``enet_coordinate_descent`` — non-negative elastic-net coordinate descent
  over a Gram matrix, one regression per taxon column.

The backend is chosen at import time: numba is used when importable unless
the environment variable ``CORESPONSE_NUMBA`` is set to ``0``/``false``/
``off``, in which case the numpy implementations run instead.  Both
implementations are always defined so they can be benchmarked against each
other (see ``benchmarks/bench_kernels.py``).

No ``fastmath`` is used: results must be deterministic for a fixed backend.
"""

import os

import numpy as np

_flag = os.environ.get("CORESPONSE_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "off")

try:
    if not _want_numba:
        raise ImportError("numba disabled via CORESPONSE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def group_terms_numpy(pop, gram, cvec):
    """Objective terms for each row of a binary population matrix.

    Args:
        pop: (m, p) uint8 matrix of chromosomes (0/1 per taxon).
        gram: (p, p) symmetric matrix M0^T M0.
        cvec: (p,) vector M0^T y0.

    Returns:
        (num, quad, size): per-row x.c, x.G.x and popcount, where num/quad
        are the numerator and squared denominator of the objective.
    """
    xf = pop.astype(np.float64)
    num = xf @ cvec
    quad = np.einsum("ij,ij->i", xf @ gram, xf)
    size = pop.sum(axis=1).astype(np.int64)
    return num, quad, size


def _group_terms_loop(pop, gram, cvec):
    m, p = pop.shape
    num = np.zeros(m)
    quad = np.zeros(m)
    size = np.zeros(m, np.int64)
    idx = np.empty(p, np.int64)
    for i in range(m):
        k = 0
        for j in range(p):
            if pop[i, j] != 0:
                idx[k] = j
                k += 1
        size[i] = k
        s_num = 0.0
        s_quad = 0.0
        for a in range(k):
            ja = idx[a]
            s_num += cvec[ja]
            s_quad += gram[ja, ja]
            for b in range(a + 1, k):
                s_quad += 2.0 * gram[ja, idx[b]]
        num[i] = s_num
        quad[i] = s_quad
    return num, quad, size


def enet_coordinate_descent_numpy(gram, mu1, mu2, max_iter, tol):
    """Non-negative elastic net for every column at once, numpy fallback.

    Solves, for each target column j of the standardized data matrix X,
        min_{b >= 0, b_j = 0}  (1/2n)||x_j - X b||^2 + mu1 ||b||_1 + (mu2/2)||b||^2
    expressed entirely through the Gram matrix ``gram = X^T X / n``.

    Coordinates are swept in index order; all p column problems advance in
    lockstep (they are independent, so this matches the per-column solver).

    Returns:
        (B, last_delta, iterations): (p, p) coefficient matrix with zero
        diagonal, the max coefficient change in the final sweep per column,
        and the number of sweeps executed per column.
    """
    p = gram.shape[0]
    B = np.zeros((p, p))
    last_delta = np.zeros(p)
    for it in range(max_iter):
        delta = np.zeros(p)
        for k in range(p):
            # partial residual correlation of predictor k with every target
            rho = gram[k, :] - gram[k, :] @ B + gram[k, k] * B[k, :]
            bk = (rho - mu1) / (gram[k, k] + mu2)
            np.clip(bk, 0.0, None, out=bk)
            bk[k] = 0.0
            delta = np.maximum(delta, np.abs(bk - B[k, :]))
            B[k, :] = bk
        last_delta = delta
        if delta.max() < tol:
            return B, last_delta, np.full(p, it + 1, np.int64)
    return B, last_delta, np.full(p, max_iter, np.int64)


def _enet_coordinate_descent_loop(gram, mu1, mu2, max_iter, tol):
    p = gram.shape[0]
    B = np.zeros((p, p))
    last_delta = np.zeros(p)
    iterations = np.zeros(p, np.int64)
    for j in range(p):
        b = np.zeros(p)
        delta = 0.0
        for it in range(max_iter):
            delta = 0.0
            for k in range(p):
                if k == j:
                    continue
                rho = gram[k, j]
                for l in range(p):
                    if l != k:
                        rho -= gram[k, l] * b[l]
                bk = (rho - mu1) / (gram[k, k] + mu2)
                if bk < 0.0:
                    bk = 0.0
                d = abs(bk - b[k])
                if d > delta:
                    delta = d
                b[k] = bk
            iterations[j] = it + 1
            if delta < tol:
                break
        last_delta[j] = delta
        B[:, j] = b
    return B, last_delta, iterations


if HAVE_NUMBA:
    group_terms_numba = njit(cache=True, nogil=True)(_group_terms_loop)
    enet_coordinate_descent_numba = njit(cache=True, nogil=True)(
        _enet_coordinate_descent_loop
    )
    group_terms = group_terms_numba
    enet_coordinate_descent = enet_coordinate_descent_numba
    BACKEND = "numba"
else:
    group_terms_numba = None
    enet_coordinate_descent_numba = None
    group_terms = group_terms_numpy
    enet_coordinate_descent = enet_coordinate_descent_numpy
    BACKEND = "numpy"

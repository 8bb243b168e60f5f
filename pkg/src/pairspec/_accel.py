"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``PAIRSPEC_DISABLE_JIT`` is unset (or ``0``). Both paths implement
the same arithmetic in the same order per entry, so results agree to
rounding (bit-identical for +, -, * and up to libm ulps for ``exp``).
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

BASE_LINEAR = 0
BASE_POLYNOMIAL = 1
BASE_GAUSSIAN = 2

CONSTRUCTION_KRONECKER = 0
CONSTRUCTION_POINTWISE = 1

TRANSFORM_NONE = 0
TRANSFORM_PERMUTED = 1
TRANSFORM_PI = 2
TRANSFORM_SYMMETRIC = 3
TRANSFORM_ANTISYMMETRIC = 4

MAX_SWEEPS = 100


def jit_enabled() -> bool:
    """Whether the numba kernels are selected for this process."""
    if numba is None:
        return False
    flag = os.environ.get("PAIRSPEC_DISABLE_JIT", "").strip().lower()
    return flag in ("", "0", "false", "no")


def _njit(f):
    if numba is None:
        return f
    return numba.njit(cache=True)(f)


# ---------------------------------------------------------------------------
# Base kernel matrices
# ---------------------------------------------------------------------------


def base_matrix_numpy(X, Y, kind, gamma, degree, offset):
    if kind == BASE_GAUSSIAN:
        diff = X[:, None, :] - Y[None, :, :]
        return np.exp(-gamma * np.sum(diff * diff, axis=2))
    dots = X @ Y.T
    if kind == BASE_LINEAR:
        return dots
    return (dots + offset) ** degree


@_njit
def base_matrix_numba(X, Y, kind, gamma, degree, offset):
    m, d = X.shape
    p = Y.shape[0]
    out = np.empty((m, p))
    for a in range(m):
        for b in range(p):
            if kind == BASE_GAUSSIAN:
                s = 0.0
                for k in range(d):
                    t = X[a, k] - Y[b, k]
                    s += t * t
                out[a, b] = np.exp(-gamma * s)
            else:
                s = 0.0
                for k in range(d):
                    s += X[a, k] * Y[b, k]
                if kind == BASE_LINEAR:
                    out[a, b] = s
                else:
                    out[a, b] = (s + offset) ** degree
    return out


# ---------------------------------------------------------------------------
# Pairwise Gram assembly
#
# With a = (i, j), b = (k, l), a' = (j, i), b' = (l, k):
#   t1 = K(a, b), t2 = K(a', b), t3 = K(a, b'), t4 = K(a', b')
# symmetric = ((t1 + t2) + (t3 + t4)) / 4 and
# antisymmetric = ((t1 - t2) - (t3 - t4)) / 4 are grouped so that swapping
# inside either argument pair reproduces (or exactly negates) the value.
# ---------------------------------------------------------------------------


def _combine_numpy(t1, t2, t3, t4, transform):
    if transform == TRANSFORM_NONE:
        return t1
    if transform == TRANSFORM_PERMUTED:
        return t4
    if transform == TRANSFORM_PI:
        return 0.5 * (t1 + t4)
    if transform == TRANSFORM_SYMMETRIC:
        return 0.25 * ((t1 + t2) + (t3 + t4))
    return 0.25 * ((t1 - t2) - (t3 - t4))


def pair_gram_numpy(B, rows, cols, construction, transform, scale):
    """Cross Gram between row pairs and column pairs over base matrix ``B``."""
    i = rows[:, 0][:, None]
    j = rows[:, 1][:, None]
    k = cols[:, 0][None, :]
    l = cols[:, 1][None, :]
    if construction == CONSTRUCTION_KRONECKER:
        t1 = B[i, k] * B[j, l]
        t2 = B[j, k] * B[i, l]
        t3 = B[i, l] * B[j, k]
        t4 = B[j, l] * B[i, k]
    else:
        t1 = B[i, k]
        t2 = B[j, k]
        t3 = B[i, l]
        t4 = B[j, l]
    return scale * _combine_numpy(t1, t2, t3, t4, transform)


@_njit
def _pair_entry(B, i, j, k, l, construction, transform):
    if construction == CONSTRUCTION_KRONECKER:
        t1 = B[i, k] * B[j, l]
        t2 = B[j, k] * B[i, l]
        t3 = B[i, l] * B[j, k]
        t4 = B[j, l] * B[i, k]
    else:
        t1 = B[i, k]
        t2 = B[j, k]
        t3 = B[i, l]
        t4 = B[j, l]
    if transform == TRANSFORM_NONE:
        return t1
    if transform == TRANSFORM_PERMUTED:
        return t4
    if transform == TRANSFORM_PI:
        return 0.5 * (t1 + t4)
    if transform == TRANSFORM_SYMMETRIC:
        return 0.25 * ((t1 + t2) + (t3 + t4))
    return 0.25 * ((t1 - t2) - (t3 - t4))


@_njit
def pair_gram_numba(B, rows, cols, construction, transform, scale):
    n = rows.shape[0]
    m = cols.shape[0]
    out = np.empty((n, m))
    for a in range(n):
        for b in range(m):
            out[a, b] = scale * _pair_entry(
                B, rows[a, 0], rows[a, 1], cols[b, 0], cols[b, 1], construction, transform
            )
    return out


@_njit
def pair_gram_sym_numba(B, pairs, construction, transform, scale):
    n = pairs.shape[0]
    out = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            v = scale * _pair_entry(
                B, pairs[a, 0], pairs[a, 1], pairs[b, 0], pairs[b, 1], construction, transform
            )
            out[a, b] = v
            out[b, a] = v
    return out


def pair_gram_sym_numpy(B, pairs, construction, transform, scale):
    G = pair_gram_numpy(B, pairs, pairs, construction, transform, scale)
    upper = np.triu(G)
    return upper + np.triu(G, 1).T


# ---------------------------------------------------------------------------
# Jacobi eigensolver, round-robin (parallel) ordering.
#
# Each round rotates n/2 disjoint index pairs. Rotations in disjoint planes
# commute and do not touch each other's pivots, so applying them one by one
# (numba) or all at once (numpy) is the same algorithm.
# ---------------------------------------------------------------------------


def round_robin_schedule(n: int) -> np.ndarray:
    """Array of shape (rounds, n_pairs, 2) covering every p < q once per sweep.

    Pairs involving the padding slot (odd ``n``) are marked with -1.
    """
    m = n + (n % 2)
    if m < 2:
        return np.zeros((0, 0, 2), dtype=np.int64)
    half = m // 2
    sched = np.empty((m - 1, half, 2), dtype=np.int64)
    for r in range(m - 1):
        pairs = [(m - 1, r)]
        for k in range(1, half):
            pairs.append(((r + k) % (m - 1), (r - k) % (m - 1)))
        for s, (p, q) in enumerate(pairs):
            p, q = min(p, q), max(p, q)
            if q >= n:
                p, q = -1, -1
            sched[r, s, 0] = p
            sched[r, s, 1] = q
    return sched


def _rotation_numpy(app, aqq, apq):
    theta = (aqq - app) / (2.0 * apq)
    t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
    t = np.where(theta == 0.0, 1.0, t)
    c = 1.0 / np.sqrt(t * t + 1.0)
    return c, t * c


def jacobi_numpy(G, sched, rel_tol, max_sweeps):
    A = np.array(G, dtype=np.float64, copy=True)
    n = A.shape[0]
    V = np.eye(n)
    fro = np.sqrt(np.sum(A * A))
    floor = fro * 1e-32
    for sweep in range(max_sweeps):
        rotated = False
        for r in range(sched.shape[0]):
            pq = sched[r]
            pq = pq[pq[:, 0] >= 0]
            p = pq[:, 0]
            q = pq[:, 1]
            apq = A[p, q]
            app = A[p, p]
            aqq = A[q, q]
            mask = (np.abs(apq) > rel_tol * np.sqrt(np.abs(app * aqq))) & (np.abs(apq) > floor)
            if not mask.any():
                continue
            rotated = True
            p = p[mask]
            q = q[mask]
            c, s = _rotation_numpy(app[mask], aqq[mask], apq[mask])
            cp = A[:, p].copy()
            cq = A[:, q]
            A[:, p] = c * cp - s * cq
            A[:, q] = s * cp + c * cq
            rp = A[p, :].copy()
            rq = A[q, :]
            A[p, :] = c[:, None] * rp - s[:, None] * rq
            A[q, :] = s[:, None] * rp + c[:, None] * rq
            A[p, q] = 0.0
            A[q, p] = 0.0
            vp = V[:, p].copy()
            vq = V[:, q]
            V[:, p] = c * vp - s * vq
            V[:, q] = s * vp + c * vq
        if not rotated:
            return np.diag(A).copy(), V, sweep + 1, True
    return np.diag(A).copy(), V, max_sweeps, False


@_njit
def jacobi_numba(G, sched, rel_tol, max_sweeps):
    A = G.copy()
    n = A.shape[0]
    V = np.eye(n)
    fro = np.sqrt(np.sum(A * A))
    floor = fro * 1e-32
    for sweep in range(max_sweeps):
        rotated = False
        for r in range(sched.shape[0]):
            for s_idx in range(sched.shape[1]):
                p = sched[r, s_idx, 0]
                q = sched[r, s_idx, 1]
                if p < 0:
                    continue
                apq = A[p, q]
                app = A[p, p]
                aqq = A[q, q]
                if not (abs(apq) > rel_tol * np.sqrt(abs(app * aqq)) and abs(apq) > floor):
                    continue
                rotated = True
                theta = (aqq - app) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
        if not rotated:
            return np.diag(A).copy(), V, sweep + 1, True
    return np.diag(A).copy(), V, max_sweeps, False


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------


def base_matrix(X, Y, kind, gamma, degree, offset):
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if jit_enabled():
        return base_matrix_numba(X, Y, kind, float(gamma), float(degree), float(offset))
    return base_matrix_numpy(X, Y, kind, gamma, degree, offset)


def pair_gram(B, rows, cols, construction, transform, scale):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    if jit_enabled():
        return pair_gram_numba(B, rows, cols, construction, transform, float(scale))
    return pair_gram_numpy(B, rows, cols, construction, transform, scale)


def pair_gram_sym(B, pairs, construction, transform, scale):
    pairs = np.ascontiguousarray(pairs, dtype=np.int64)
    if jit_enabled():
        return pair_gram_sym_numba(B, pairs, construction, transform, float(scale))
    return pair_gram_sym_numpy(B, pairs, construction, transform, scale)


def jacobi(G, rel_tol=1e-15, max_sweeps=MAX_SWEEPS):
    """Return (eigenvalues, eigenvectors, sweeps, converged) in solver order."""
    G = np.ascontiguousarray(G, dtype=np.float64)
    sched = round_robin_schedule(G.shape[0])
    if jit_enabled():
        return jacobi_numba(G, sched, float(rel_tol), int(max_sweeps))
    return jacobi_numpy(G, sched, rel_tol, max_sweeps)

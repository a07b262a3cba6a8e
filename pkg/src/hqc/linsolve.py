"""Linear solves with cyclic (periodic) banded matrices.

A cyclic band of halfwidth R is stored as ``diags`` of shape (2R+1, N)
with ``diags[R + d, i] = A[i, (i + d) % N]`` for offsets d = -R..R.

``solve_cyclic_banded`` uses a bordered factorization: the acyclic part of
the band is factorized with LAPACK's banded solver and the 2R x 2R corner
block (the periodic wrap) plus an optional rank-one mean regularization
are folded back in through the Woodbury identity, for O(N R^2) work.  If
the acyclic band is singular or the result fails a residual check, the
solve falls back to a sparse bordered KKT system.

The mean regularization replaces A by A + (alpha/N) * ones * ones^T.  When
the constants span ker(A) and the right-hand side has zero mean, the
regularized solve returns exactly the zero-mean solution, independent of
alpha > 0.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .exceptions import SolverFailure


def cyclic_matvec(diags: np.ndarray, x: np.ndarray) -> np.ndarray:
    R = (diags.shape[0] - 1) // 2
    out = np.zeros_like(x, dtype=float)
    for d in range(-R, R + 1):
        out += diags[R + d] * np.roll(x, -d)
    return out


def cyclic_to_dense(diags: np.ndarray) -> np.ndarray:
    R = (diags.shape[0] - 1) // 2
    n = diags.shape[1]
    A = np.zeros((n, n))
    idx = np.arange(n)
    for d in range(-R, R + 1):
        A[idx, (idx + d) % n] += diags[R + d]
    return A


def _solve_kkt_sparse(diags, rhs, mean_reg):
    n = diags.shape[1]
    A = scipy.sparse.csc_matrix(_cyclic_coo(diags))
    if mean_reg:
        c = scipy.sparse.csc_matrix(np.ones((n, 1)) / n)
        K = scipy.sparse.bmat([[A, c], [c.T, None]], format="csc")
        sol = scipy.sparse.linalg.spsolve(K, np.concatenate([rhs, [0.0]]))
        return sol[:-1]
    return scipy.sparse.linalg.spsolve(A, rhs)


def _cyclic_coo(diags):
    R = (diags.shape[0] - 1) // 2
    n = diags.shape[1]
    rows, cols, vals = [], [], []
    idx = np.arange(n)
    for d in range(-R, R + 1):
        rows.append(idx)
        cols.append((idx + d) % n)
        vals.append(diags[R + d])
    return scipy.sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def solve_cyclic_banded(diags: np.ndarray, rhs: np.ndarray, mean_reg: float = 0.0) -> np.ndarray:
    """Solve (A + (mean_reg/N) 11^T) x = rhs for a cyclic banded A."""
    R = (diags.shape[0] - 1) // 2
    n = diags.shape[1]
    rhs = np.asarray(rhs, dtype=float)

    if n <= 4 * R + 2:
        A = cyclic_to_dense(diags)
        if mean_reg:
            A = A + mean_reg / n
        try:
            return np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverFailure("singular dense linear system") from exc

    # acyclic band in LAPACK storage ab[R + i - j, j] = A[i, j]
    ab = np.zeros((2 * R + 1, n))
    corner = []
    for d in range(-R, R + 1):
        vals = diags[R + d]
        if d >= 0:
            ab[R - d, d:] = vals[: n - d]
            for i in range(n - d, n):
                corner.append((i, i + d - n, vals[i]))
        else:
            ab[R - d, : n + d] = vals[-d:]
            for i in range(0, -d):
                corner.append((i, i + d + n, vals[i]))

    idx = np.array(list(range(R)) + list(range(n - R, n)))
    pos = {int(i): k for k, i in enumerate(idx)}
    M = np.zeros((2 * R, 2 * R))
    for i, j, v in corner:
        M[pos[i], pos[j]] += v

    ncols = 2 * R + (1 if mean_reg else 0)
    B = np.zeros((n, 1 + ncols))
    B[:, 0] = rhs
    for k, i in enumerate(idx):
        B[i, 1 + k] = 1.0
    if mean_reg:
        B[:, -1] = 1.0

    try:
        X = scipy.linalg.solve_banded((R, R), ab, B)
        xb = X[:, 0]
        XU = X[:, 1:]
        # Woodbury: K is the corner block extended by the mean regularization
        K = np.zeros((ncols, ncols))
        K[: 2 * R, : 2 * R] = M
        if mean_reg:
            K[-1, -1] = mean_reg / n
        UtX = np.vstack([XU[idx, :], XU.sum(axis=0)]) if mean_reg else XU[idx, :]
        Utxb = np.concatenate([xb[idx], [xb.sum()]]) if mean_reg else xb[idx]
        S = np.eye(ncols) + K @ UtX
        x = xb - XU @ np.linalg.solve(S, K @ Utxb)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        return _solve_kkt_sparse(diags, rhs, mean_reg)

    resid = cyclic_matvec(diags, x) + (mean_reg / n) * x.sum() - rhs
    scale = max(1.0, float(np.abs(rhs).max()), float(np.abs(diags).max() * np.abs(x).max()))
    if not np.isfinite(x).all() or np.abs(resid).max() > 1e-8 * scale:
        return _solve_kkt_sparse(diags, rhs, mean_reg)
    return x

"""Small dense linear-algebra kernel.

Matrices are plain 2-D ``numpy.ndarray`` objects of floats. The matrices
handled by this package are tiny (at most a few tens of rows), so the
routines favour transparent elimination over speed.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotReconstructible

#: relative pivot threshold used by :func:`rank` and :func:`kernel_basis`
RANK_TOL = 1e-10
#: relative pivot threshold below which a Gram matrix is declared singular
PIVOT_TOL = 1e-12


def as_matrix(a):
    """Return ``a`` as a finite 2-D float array (a copy is made)."""
    m = np.array(a, dtype=float)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def multiply(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def rref(a, tol=RANK_TOL):
    """Reduced row echelon form by Gauss-Jordan elimination with partial pivoting.

    Returns ``(r, pivots)`` where ``pivots`` lists the pivot column indices.
    Entries whose magnitude falls below ``tol * max|a|`` are treated as zero.
    """
    r = np.array(a, dtype=float)
    n_rows, n_cols = r.shape
    scale = np.max(np.abs(r)) if r.size else 0.0
    thresh = tol * scale
    pivots = []
    row = 0
    for col in range(n_cols):
        if row >= n_rows:
            break
        i = row + int(np.argmax(np.abs(r[row:, col])))
        if abs(r[i, col]) <= thresh:
            r[row:, col] = 0.0
            continue
        if i != row:
            r[[row, i]] = r[[i, row]]
        r[row] /= r[row, col]
        others = np.arange(n_rows) != row
        r[others] -= np.outer(r[others, col], r[row])
        pivots.append(col)
        row += 1
    return r, pivots


def rank(a, tol=RANK_TOL):
    a = np.asarray(a, dtype=float)
    if a.size == 0 or not np.any(a):
        return 0
    return len(rref(a, tol)[1])


def kernel_basis(a, tol=RANK_TOL):
    """Orthonormal basis of the null space of ``a`` as a list of vectors.

    The basis is read off the free columns of the reduced row echelon form
    and then orthonormalized.
    """
    a = np.asarray(a, dtype=float)
    n_cols = a.shape[1]
    if not np.any(a):
        return list(np.eye(n_cols))
    # the null space is scale invariant; rescaling keeps pinv away from under/overflow
    a = a / np.abs(a).max()
    r, pivots = rref(a, tol)
    free = [j for j in range(n_cols) if j not in pivots]
    if not free:
        return []
    raw = np.zeros((n_cols, len(free)))
    for k, j in enumerate(free):
        raw[j, k] = 1.0
        for i, pj in enumerate(pivots):
            raw[pj, k] = -r[i, j]
    q, _ = np.linalg.qr(raw)
    # one sweep of projection removes the elimination round-off; skipped when
    # the rank sits at the threshold and the sweep would erase the vectors
    cleaned = q - np.linalg.pinv(a, rcond=tol) @ (a @ q)
    if np.linalg.norm(cleaned, axis=0).min() > 0.5:
        q, _ = np.linalg.qr(cleaned)
    return [q[:, k].copy() for k in range(q.shape[1])]


def left_pseudo_inverse(a):
    """Moore-Penrose left inverse ``(a^T a)^{-1} a^T`` of a full-column-rank matrix.

    The Gram matrix is LU-factorized with partial pivoting; a pivot smaller
    than ``PIVOT_TOL`` times the largest one signals rank deficiency.
    """
    a = as_matrix(a)
    n_rows, n_cols = a.shape
    if n_rows < n_cols:
        raise NotReconstructible(f"{n_rows}x{n_cols} matrix cannot have full column rank")
    gram = a.T @ a
    with warnings.catch_warnings():
        # singular Gram matrices are reported below as NotReconstructible
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(gram, check_finite=False)
    diag = np.abs(np.diag(lu))
    if diag.max() == 0.0 or diag.min() < PIVOT_TOL * diag.max():
        raise NotReconstructible("matrix is rank deficient (vanishing pivot in the Gram matrix)")
    x = scipy.linalg.lu_solve((lu, piv), a.T, check_finite=False)
    # The Gram matrix squares the condition number; X <- (2I - Xa)X squares
    # the residual Xa - I and leaves the exact pseudoinverse fixed.
    eye = np.eye(n_cols)
    resid = np.abs(x @ a - eye).max()
    for _ in range(3):
        if resid < 1e-14:
            break
        x_new = (2.0 * eye - x @ a) @ x
        resid_new = np.abs(x_new @ a - eye).max()
        if resid_new >= resid:
            break
        x, resid = x_new, resid_new
    return x

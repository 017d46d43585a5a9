"""Pure-Python Lawson-Hanson NNLS on the normal equations.

Solves ``min_x x^T A x - 2 c^T x`` subject to ``x >= 0`` for a symmetric
positive semidefinite ``A``. This is the fallback used when the compiled
kernel in ``_nnls_core`` is not available; both implement the same
iteration and return ``(x, n_iter, converged)``.
"""

import numpy as np


def _solve_passive(A, c, idx):
    L = np.linalg.cholesky(A[np.ix_(idx, idx)])
    y = np.linalg.solve(L, c[idx])
    return np.linalg.solve(L.T, y)


def nnls_gram(A, c, tol, max_iter):
    A = np.ascontiguousarray(A, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    n = c.shape[0]
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    w = c.copy()
    n_iter = 0

    while n_iter < max_iter:
        cand = np.where(passive | blocked, -np.inf, w)
        t = int(np.argmax(cand))
        if not cand[t] > tol:
            break
        passive[t] = True
        added = True
        while True:
            n_iter += 1
            idx = np.flatnonzero(passive)
            try:
                z = _solve_passive(A, c, idx)
            except np.linalg.LinAlgError:
                # numerically dependent column; skip it until the set changes
                passive[t] = False
                blocked[t] = True
                added = False
                break
            if np.all(z > 0):
                x[:] = 0.0
                x[idx] = z
                break
            if n_iter >= max_iter:
                x[:] = 0.0
                x[idx] = np.maximum(z, 0.0)
                break
            xi = x[idx]
            neg = np.flatnonzero(z <= 0)
            ratios = xi[neg] / (xi[neg] - z[neg])
            k = int(np.argmin(ratios))
            xi = xi + ratios[k] * (z - xi)
            xi[neg[k]] = 0.0
            x[:] = 0.0
            x[idx] = xi
            passive[idx[xi <= 0]] = False
        if added:
            blocked[:] = False
        w = c - A @ x

    w = c - A @ x
    converged = bool(np.all(w[~passive] <= tol) and np.all(np.abs(w[passive]) <= tol))
    return x, n_iter, converged

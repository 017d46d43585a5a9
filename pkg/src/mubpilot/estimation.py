"""Large-scale gain fitting, group partitioning and beta-weighted MMSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import (CapacityExceeded, InvalidBeta, NonPositiveNoise,
                     SolverFailure)
from .metrics import abs2_gram
from .nnls import nnls_gram

KKT_TOL = 1e-9


@dataclass(frozen=True)
class GainEstimate:
    theta: np.ndarray   # (JK,), codebook column order
    residual: float     # squared Frobenius misfit at the solution
    iterations: int = 0


@dataclass(frozen=True)
class GroupPartition:
    group_a: np.ndarray  # in-cell users first, then strongest out-of-cell
    group_b: np.ndarray


@dataclass(frozen=True)
class SmallScaleEstimate:
    H_hat_a: np.ndarray  # rows follow group_a
    beta: float


def _pilots(cb: Codebook | np.ndarray) -> np.ndarray:
    return cb.matrix if isinstance(cb, Codebook) else np.asarray(cb)


def sample_covariance(Y: np.ndarray) -> np.ndarray:
    M = Y.shape[1]
    R = (Y @ Y.conj().T) / M
    return 0.5 * (R + R.conj().T)


def kkt_tolerance(c: np.ndarray, kkt_tol: float = KKT_TOL) -> float:
    """Absolute KKT tolerance, relative to the data scale when it exceeds 1."""
    return kkt_tol * max(1.0, float(np.max(np.abs(c), initial=0.0)))


def estimate_large_scale(R_hat: np.ndarray, cb: Codebook | np.ndarray, sigma_u2: float,
                         kkt_tol: float = KKT_TOL, max_iter: int | None = None,
                         backend: str | None = None) -> GainEstimate:
    """Fit ``R_hat ~ P diag(theta) P^H + sigma_u2 I`` with ``theta >= 0``.

    The Frobenius objective equals the NNLS problem
    ``||vec(R_hat - sigma_u2 I) - D theta||^2``; it is solved on its normal
    equations, ``A = |P^H P|**2`` and ``c_k = p_k^H (R_hat - sigma_u2 I) p_k``.
    """
    P = _pilots(cb)
    Q, n = P.shape
    if n > Q * Q:
        raise CapacityExceeded(f"{n} users exceed the Q^2={Q * Q} resolvable gains")
    A = abs2_gram(P)
    target = R_hat - sigma_u2 * np.eye(Q)
    c = np.einsum("qi,qr,ri->i", P.conj(), target, P).real
    tol = kkt_tolerance(c, kkt_tol)
    max_iter = 10 * n if max_iter is None else max_iter
    theta, n_iter, converged = nnls_gram(A, c, tol, max_iter, backend=backend)
    if not converged:
        raise SolverFailure(f"NNLS KKT residual above {tol:.3g} after {n_iter} iterations")
    fit = (P * theta) @ P.conj().T
    residual = float(np.linalg.norm(target - fit) ** 2)
    return GainEstimate(theta, residual, n_iter)


def objective_gradient(R_hat: np.ndarray, cb: Codebook | np.ndarray, sigma_u2: float,
                       theta: np.ndarray) -> np.ndarray:
    """Gradient of the Frobenius misfit with respect to ``theta``."""
    P = _pilots(cb)
    target = R_hat - sigma_u2 * np.eye(P.shape[0])
    c = np.einsum("qi,qr,ri->i", P.conj(), target, P).real
    return 2.0 * (abs2_gram(P) @ theta - c)


def partition_groups(theta: GainEstimate | np.ndarray, home_cell: int, J: int, Q: int,
                     K: int, positive_only: bool = False,
                     pilots: np.ndarray | None = None,
                     span_tol: float = 1e-6) -> GroupPartition:
    """Home-cell users plus the ``Q - K`` strongest out-of-cell users form group a.

    Out-of-cell users are ranked by estimated gain, descending, ties to the
    lower column index. With fewer than ``Q`` users in total, everyone is in
    group a.

    Two optional filters make group a resolvable, at the price of possibly
    holding fewer than ``Q`` users: ``positive_only`` never promotes a user
    whose estimated gain is zero, and with ``pilots`` (the ``Q x JK`` pilot
    matrix) a candidate is skipped when its pilot lies in the span of the
    pilots already selected (relative residual below ``span_tol``).
    """
    th = theta.theta if isinstance(theta, GainEstimate) else np.asarray(theta)
    n_users = J * K
    home = np.arange(home_cell * K, (home_cell + 1) * K)
    others = np.concatenate([np.arange(home_cell * K), np.arange((home_cell + 1) * K, n_users)])
    n_extra = max(0, min(Q, n_users) - K)
    order = others[np.lexsort((others, -th[others]))]
    if positive_only:
        order = order[th[order] > 0]
    if pilots is None:
        chosen = order[:n_extra]
    else:
        dim = pilots.shape[0]
        basis = np.empty((dim, dim), dtype=complex)
        basis[:, :K], _ = np.linalg.qr(pilots[:, home])
        rank = K
        picked = []
        for c in order:
            if len(picked) == n_extra or rank == dim:
                break
            p = pilots[:, c]
            b = basis[:, :rank]
            r = p - b @ (b.conj().T @ p)
            nr = np.sqrt(np.vdot(r, r).real)
            if nr > span_tol * np.sqrt(np.vdot(p, p).real):
                basis[:, rank] = r / nr
                rank += 1
                picked.append(c)
        chosen = np.array(picked, dtype=int)
    mask = np.ones(n_users, dtype=bool)
    mask[home] = False
    mask[chosen] = False
    return GroupPartition(np.concatenate([home, chosen]).astype(int), np.flatnonzero(mask))


def mmse_small_scale(Y: np.ndarray, cb: Codebook | np.ndarray, part: GroupPartition,
                     theta: GainEstimate | np.ndarray, sigma_u2: float,
                     beta: float) -> SmallScaleEstimate:
    """Group-a channel estimate with group-b interference weighted by ``beta``.

    ``H_a = G_a P_a^H [P_a G_a P_a^H + beta P_b G_b P_b^H + sigma_u2 I]^{-1} Y``
    """
    if not 0.0 <= beta <= 1.0:
        raise InvalidBeta(f"beta={beta} outside [0, 1]")
    if not sigma_u2 > 0:
        raise NonPositiveNoise("sigma_u2 must be positive for the MMSE bracket")
    P = _pilots(cb)
    th = theta.theta if isinstance(theta, GainEstimate) else np.asarray(theta)
    Pa, ga = P[:, part.group_a], th[part.group_a]
    C = (Pa * ga) @ Pa.conj().T + sigma_u2 * np.eye(P.shape[0])
    if beta > 0 and part.group_b.size:
        Pb, gb = P[:, part.group_b], th[part.group_b]
        C = C + beta * ((Pb * gb) @ Pb.conj().T)
    X = np.linalg.solve(C, Y)
    H_a = ga[:, None] * (Pa.conj().T @ X)
    return SmallScaleEstimate(H_a, float(beta))

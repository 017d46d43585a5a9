"""Algebraic figures of merit for pilot codebooks.

The covariance fit lifts each pilot ``p`` to ``conj(p) kron p`` (the
column-major ``vec`` of ``p p^H``). Stacking those lifts gives the D-matrix,
whose Gram ``D^H D`` has entries ``|p_i^H p_j|**2``; the noise enhancement of
the large-scale estimator is the trace of its pseudo-inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import DegenerateInput


@dataclass(frozen=True)
class DMatrix:
    matrix: np.ndarray  # Q**2 x JK

    def gram(self) -> np.ndarray:
        """``D^H D``, real symmetric (imaginary part is rounding noise)."""
        return (self.matrix.conj().T @ self.matrix).real


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray  # descending
    numerical_rank: int
    trace_pinv: float


def lift(p: np.ndarray) -> np.ndarray:
    """``conj(p) kron p`` for a column vector, or column-wise for a matrix."""
    p = np.asarray(p)
    if p.ndim == 1:
        return np.kron(p.conj(), p)
    q, n = p.shape
    return (p.conj()[:, None, :] * p[None, :, :]).reshape(q * q, n)


def build_d_matrix(cb: Codebook) -> DMatrix:
    return DMatrix(lift(cb.matrix))


def abs2_gram(P: np.ndarray) -> np.ndarray:
    """``|P^H P|**2`` elementwise, equal to ``D^H D`` without forming ``D``."""
    g = P.conj().T @ P
    return g.real ** 2 + g.imag ** 2


def spectrum(d: DMatrix | np.ndarray, rank_tol: float = 1e-8) -> SpectrumReport:
    """Hermitian eigendecomposition of ``D^H D``.

    ``d`` may also be a precomputed Gram matrix (square, real or complex).
    Eigenvalues above ``rank_tol * lambda_max`` count toward the rank and
    the pseudo-inverse trace.
    """
    gram = d.gram() if isinstance(d, DMatrix) else np.asarray(d)
    evals = np.linalg.eigvalsh(gram)[::-1]
    if evals.size == 0 or evals[0] <= 0:
        return SpectrumReport(evals, 0, 0.0)
    keep = evals > rank_tol * evals[0]
    return SpectrumReport(evals, int(keep.sum()), float(np.sum(1.0 / evals[keep])))


def noise_enhancement(cb: Codebook, rank_tol: float = 1e-8) -> float:
    return spectrum(abs2_gram(cb.matrix), rank_tol).trace_pinv


def gram_matrix(cb: Codebook) -> np.ndarray:
    return cb.matrix.conj().T @ cb.matrix


def welch_type_bound(J: int, Q: int, K: int) -> float:
    """Lower bound on the cross-cell coherence of any per-cell orthonormal codebook."""
    if J < 2:
        raise DegenerateInput("bound needs at least two cells")
    num = J * K - Q
    if num <= 0:
        return 0.0
    return float(np.sqrt(num / (K * Q * (J - 1))))


def lemma2_column_sum(block: np.ndarray) -> float:
    """Max deviation of the summed column lifts of a unitary block from ``vec(I)``."""
    block = np.asarray(block)
    Q = block.shape[0]
    total = lift(block).sum(axis=1)
    target = np.eye(Q).reshape(-1)
    return float(np.max(np.abs(total - target)))

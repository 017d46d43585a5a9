"""Zero-forcing precoders and downlink SINR.

Convention: the effective downlink channel of precoder ``v`` at a user with
channel row ``h^T`` is ``h^T v`` (no conjugation). ZF precoders are
normalized columns of the right pseudo-inverse of the estimated group-a
channel matrix, so ``H_a v_k`` is proportional to ``e_k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import RankDeficient

COND_LIMIT = 1e12


@dataclass(frozen=True)
class PrecoderSet:
    V: np.ndarray  # (M, K), unit-norm columns


@dataclass(frozen=True)
class RateSample:
    sinr: np.ndarray            # (J, K)
    effective_rate: np.ndarray  # (J, K), bits/s/Hz

    @classmethod
    def from_sinr(cls, sinr: np.ndarray, K: int, Q: int) -> "RateSample":
        return cls(sinr, effective_rate(sinr, K, Q))


def effective_rate(sinr: np.ndarray, K: int, Q: int) -> np.ndarray:
    return (K / Q) * np.log2(1.0 + np.asarray(sinr))


def zf_precoders(H_hat_a: np.ndarray, K: int) -> PrecoderSet:
    """Unit-norm ZF precoders for the first ``K`` rows of ``H_hat_a``.

    The remaining rows (out-of-cell group-a users) are nulled but not served.
    Rows are normalized first: rescaling a row only rescales the matching
    pseudo-inverse column, so the unit-norm precoders are unchanged while the
    conditioning check sees geometry rather than gain spread.
    """
    H = np.asarray(H_hat_a)
    norms = np.linalg.norm(H, axis=1)
    if np.any(norms == 0):
        raise RankDeficient("group-a estimate has an all-zero row")
    H = H / norms[:, None]
    gram = H @ H.conj().T
    ev = np.linalg.eigvalsh(gram)
    cond = ev[-1] / ev[0] if ev[0] > 0 else np.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise RankDeficient(f"group-a Gram condition number {cond:.3g} exceeds {COND_LIMIT:g}")
    # H^+ = H^H (H H^H)^{-1}; only the served columns are needed
    rhs = np.eye(H.shape[0], K)
    pinv_cols = H.conj().T @ np.linalg.solve(gram, rhs)
    V = pinv_cols / np.linalg.norm(pinv_cols, axis=0)
    return PrecoderSet(V)


def received_gains(precoders: Sequence[PrecoderSet], channels: np.ndarray) -> np.ndarray:
    """``|h_{b,(j,k)}^T v_{b,k'}|^2`` for every BS ``b``, user (j,k), stream k'.

    ``channels`` has shape (J, J*K, M) as produced by ``draw_channels``.
    Returns shape (J_bs, J*K, K).
    """
    return np.stack([np.abs(channels[b] @ p.V) ** 2 for b, p in enumerate(precoders)])


def compute_sinr(precoders: Sequence[PrecoderSet], channels: np.ndarray, sigma_d2: float,
                 Q: int) -> RateSample:
    """Per-user SINR against the true channels.

    The user (i, k) collects its own stream from BS ``i``, the other ``K - 1``
    streams of BS ``i``, and every stream of every other BS ``j`` through the
    channel between BS ``j`` and that user.
    """
    J = len(precoders)
    K = precoders[0].V.shape[1]
    power = received_gains(precoders, channels)  # (bs, user, stream)
    users = np.arange(J * K)
    serving = users // K
    signal = power[serving, users, users % K]
    interference = power.sum(axis=(0, 2)) - signal
    sinr = (signal / (interference + sigma_d2)).reshape(J, K)
    return RateSample.from_sinr(sinr, K, Q)

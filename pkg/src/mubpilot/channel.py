"""Seven-cell wraparound hexagonal layout, user drops and Rayleigh channels.

Hexagons are flat-topped with circumradius ``R``; neighbouring base
stations sit ``sqrt(3) R`` apart at angles 30 + 60 n degrees. Wraparound
is the torus induced by tiling the plane with copies of the 7-cell cluster:
distances are minimised over the cluster translations
``{0, +-T1, +-T2, +-(T1 - T2)}`` with ``|T1| = sqrt(21) R``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import DimensionMismatch, InvalidParameter

N_CELLS = 7


@dataclass(frozen=True)
class NetworkGeometry:
    R: float
    alpha: float
    bs_positions: np.ndarray       # (7, 2)
    wrap_translations: np.ndarray  # (7, 2), first row is zero

    @property
    def J(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def cluster_diameter(self) -> float:
        return 2.0 * np.sqrt(7.0) * self.R


@dataclass(frozen=True)
class UserDrop:
    positions: np.ndarray  # (J, K, 2)
    draws: int             # in-hexagon candidate points generated


def _polar(r: float, deg: float) -> np.ndarray:
    a = np.deg2rad(deg)
    return np.array([r * np.cos(a), r * np.sin(a)])


def build_geometry(R: float = 10.0, alpha: float = 2.5) -> NetworkGeometry:
    if not R > 0 or not alpha > 0:
        raise InvalidParameter("cell radius and path-loss exponent must be positive")
    d = np.sqrt(3.0) * R
    bs = np.vstack([np.zeros(2)] + [_polar(d, 30.0 + 60.0 * n) for n in range(6)])
    # cluster lattice vector: two steps along 30 deg, one along 90 deg
    t1 = 2.0 * _polar(d, 30.0) + _polar(d, 90.0)
    rot = np.array([[0.5, -np.sqrt(3.0) / 2], [np.sqrt(3.0) / 2, 0.5]])
    t2 = rot @ t1
    wraps = np.vstack([np.zeros(2), t1, -t1, t2, -t2, t1 - t2, t2 - t1])
    return NetworkGeometry(float(R), float(alpha), bs, wraps)


def in_hexagon(points: np.ndarray, center: np.ndarray, R: float) -> np.ndarray:
    """Containment test for the flat-topped hexagon of circumradius ``R``."""
    rel = np.abs(np.asarray(points) - center)
    h = np.sqrt(3.0) / 2.0 * R
    return (rel[..., 1] <= h) & (np.sqrt(3.0) * rel[..., 0] + rel[..., 1] <= np.sqrt(3.0) * R)


def wrap_distance(points: np.ndarray, targets: np.ndarray,
                  translations: np.ndarray) -> np.ndarray:
    """Torus distance from each point (..., 2) to each target (T, 2) -> (..., T)."""
    pts = np.asarray(points)[..., None, None, :]
    images = targets[:, None, :] + translations[None, :, :]
    d = np.linalg.norm(pts - images, axis=-1)
    return d.min(axis=-1)


def fold_into_cluster(points: np.ndarray, geo: NetworkGeometry) -> np.ndarray:
    """Map points onto their image inside the 7-cell cluster.

    Points within one cluster diameter of the origin have exactly one image
    among the wrap translations; points farther out are returned unchanged.
    """
    pts = np.array(points, dtype=float)
    flat = pts.reshape(-1, 2)
    done = np.zeros(flat.shape[0], dtype=bool)
    for t in geo.wrap_translations:
        cand = flat - t
        inside = np.zeros(flat.shape[0], dtype=bool)
        for c in geo.bs_positions:
            inside |= in_hexagon(cand, c, geo.R)
        hit = inside & ~done
        flat[hit] = cand[hit]
        done |= hit
    return pts


def drop_users(geo: NetworkGeometry, K: int, d_min: float,
               rng: np.random.Generator, J: int | None = None) -> UserDrop:
    """Uniform drop of ``K`` users per hexagon, rejecting points within ``d_min`` of the BS.

    Candidates come from the bounding box; points outside the hexagon or too
    close to the serving BS are redrawn.
    """
    J = geo.J if J is None else J
    R = geo.R
    h = np.sqrt(3.0) / 2.0 * R
    batch = 2 * K + 8
    rel = np.empty((J, K, 2))
    filled = np.zeros(J, dtype=int)
    draws = 0
    while np.any(filled < K):
        cand = rng.uniform((-R, -h), (R, h), size=(J, batch, 2))
        inside = in_hexagon(cand, np.zeros(2), R)
        ok = inside & (np.hypot(cand[..., 0], cand[..., 1]) >= d_min)
        for j in np.flatnonzero(filled < K):
            need = K - filled[j]
            hits = np.flatnonzero(ok[j])[:need]
            if hits.size == need:
                # count in-hexagon candidates up to the last one used
                draws += int(inside[j, :hits[-1] + 1].sum())
            else:
                draws += int(inside[j].sum())
            rel[j, filled[j]:filled[j] + hits.size] = cand[j, hits]
            filled[j] += hits.size
    return UserDrop(geo.bs_positions[:J, None, :] + rel, draws)


def compute_gains(geo: NetworkGeometry, drop: UserDrop,
                  alpha: float | None = None) -> np.ndarray:
    """Large-scale gains ``g[i, j, k] = d_wrap(UE_jk, BS_i) ** -alpha``, shape (J, J, K).

    Positions are folded into the cluster first, so the gains do not change
    when the whole drop is shifted by a wrap translation.
    """
    alpha = geo.alpha if alpha is None else alpha
    J = drop.positions.shape[0]
    pos = fold_into_cluster(drop.positions, geo)
    d = wrap_distance(pos, geo.bs_positions[:J], geo.wrap_translations)
    # d is (J_users, K, J_bs); reorder to (bs, cell, user)
    return np.transpose(d, (2, 0, 1)) ** (-alpha)


def draw_channels(gains: np.ndarray, M: int, rng: np.random.Generator) -> np.ndarray:
    """Rayleigh channels for every BS, shape (J, J*K, M).

    Row ``j*K + k`` of ``H[i]`` is the channel of UE (j, k) to BS ``i``, with
    i.i.d. ``CN(0, g[i, j, k])`` entries.
    """
    if M < 1:
        raise InvalidParameter("M must be at least 1")
    J = gains.shape[0]
    n = gains.shape[1] * gains.shape[2]
    z = rng.standard_normal((J, n, M, 2))
    scale = np.sqrt(gains.reshape(J, n, 1) / 2.0)
    return scale * (z[..., 0] + 1j * z[..., 1])


def uplink_receive(cb: Codebook | np.ndarray, H_i: np.ndarray, sigma_u2: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Received pilot block ``Y = P H + W`` at one BS (Q x M)."""
    P = cb.matrix if isinstance(cb, Codebook) else np.asarray(cb)
    if P.shape[1] != H_i.shape[0]:
        raise DimensionMismatch(
            f"codebook has {P.shape[1]} columns but channel has {H_i.shape[0]} rows")
    Q, M = P.shape[0], H_i.shape[1]
    w = rng.standard_normal((Q, M, 2)) * np.sqrt(sigma_u2 / 2.0)
    return P @ H_i + (w[..., 0] + 1j * w[..., 1])

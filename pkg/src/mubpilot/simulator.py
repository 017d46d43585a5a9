"""Monte Carlo campaigns over the 7-cell network.

Every trial draws from its own stream ``SeedSequence(seed, spawn_key=(1, t))``
and the campaign codebook from ``SeedSequence(seed, spawn_key=(0,))``, so
results do not depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .channel import (N_CELLS, NetworkGeometry, build_geometry, compute_gains,
                      draw_channels, drop_users, uplink_receive)
from .codebook import Codebook, CodebookKind, build_codebook
from .downlink import RateSample, compute_sinr, zf_precoders
from .errors import ConfigError, MubPilotError, RankDeficient, SolverFailure
from .estimation import (GroupPartition, estimate_large_scale, mmse_small_scale,
                         partition_groups, sample_covariance)

log = logging.getLogger(__name__)

IN_CELL_GAIN_FLOOR = 1e-9  # relative to sigma_u2


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; defaults reproduce the 7-cell, 128-antenna setup.

    ``sigma_d2`` is used as given for every ``K`` (it is not rescaled by the
    per-user power split). ``perfect_csi`` bypasses estimation and feeds the
    true group-a channels to the precoder.
    """
    J: int = 7
    Q: int = 7
    K: int = 3
    M: int = 128
    R: float = 10.0
    alpha: float = 2.5
    sigma_u2: float = 1e-3
    sigma_d2: float = 1e-4
    beta: float = 0.0
    codebook_kind: CodebookKind = CodebookKind.MUB
    trials: int = 1
    seed: int = 0
    d_min: float = 0.5
    perfect_csi: bool = False

    def __post_init__(self):
        if isinstance(self.codebook_kind, str):
            object.__setattr__(self, "codebook_kind", CodebookKind.parse(self.codebook_kind))
        self.validate()

    def validate(self) -> None:
        if not 1 <= self.J <= N_CELLS:
            raise ConfigError(f"J must be in 1..{N_CELLS}")
        if self.Q < 2:
            raise ConfigError("Q must be at least 2")
        if not 1 <= self.K <= self.Q:
            raise ConfigError("K must satisfy 1 <= K <= Q")
        if self.J * self.K > self.Q ** 2:
            raise ConfigError("J*K must not exceed Q^2")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.M < 1:
            raise ConfigError("M must be positive")
        if not (self.R > 0 and self.alpha > 0):
            raise ConfigError("R and alpha must be positive")
        if not (self.sigma_u2 > 0 and self.sigma_d2 > 0):
            raise ConfigError("noise powers must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if self.d_min < 0:
            raise ConfigError("d_min must be nonnegative")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_FIELD_PARSERS: dict[str, Callable[[str], object]] = {
    "J": int, "Q": int, "K": int, "M": int, "trials": int, "seed": int,
    "R": float, "alpha": float, "sigma_u2": float, "sigma_d2": float,
    "beta": float, "d_min": float,
    "codebook_kind": CodebookKind.parse, "perfect_csi": _parse_bool,
}


def parse_config(text: str) -> SimConfig:
    """Parse flat ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _FIELD_PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _FIELD_PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return SimConfig(**values)


def load_config(path: str | Path) -> SimConfig:
    return parse_config(Path(path).read_text())


def format_config(cfg: SimConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, CodebookKind):
            v = v.value
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


def codebook_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, trial_index)))


def campaign_codebook(cfg: SimConfig) -> Codebook:
    """Full ``Q``-column-per-cell codebook shared by every trial of a campaign."""
    return build_codebook(cfg.codebook_kind, cfg.Q, cfg.J, codebook_rng(cfg.seed))


def _estimate_group_a(cfg: SimConfig, P: Codebook, Y: np.ndarray, i: int) -> np.ndarray:
    """Group-a channel estimate at BS ``i`` (rows: in-cell users first)."""
    K = cfg.K
    if cfg.codebook_kind is CodebookKind.ORTHOGONAL_REUSED:
        # the BS only knows its own users and their pilots
        own = P.block(i)
        est = estimate_large_scale(sample_covariance(Y), own, cfg.sigma_u2)
        part = GroupPartition(np.arange(K), np.empty(0, dtype=int))
        return mmse_small_scale(Y, own, part, est, cfg.sigma_u2, cfg.beta).H_hat_a
    theta = estimate_large_scale(sample_covariance(Y), P, cfg.sigma_u2).theta
    home = slice(i * K, (i + 1) * K)
    # a served user with zero estimated gain keeps the limiting MMSE direction
    theta[home] = np.maximum(theta[home], IN_CELL_GAIN_FLOOR * cfg.sigma_u2)
    part = partition_groups(theta, i, cfg.J, cfg.Q, K, positive_only=True, pilots=P.matrix)
    return mmse_small_scale(Y, P, part, theta, cfg.sigma_u2, cfg.beta).H_hat_a


def run_trial(cfg: SimConfig, trial_index: int, codebook: Codebook | None = None,
              geometry: NetworkGeometry | None = None) -> RateSample:
    """One drop: uplink training at every BS, ZF precoding, SINR on true channels."""
    cb = campaign_codebook(cfg) if codebook is None else codebook
    geo = build_geometry(cfg.R, cfg.alpha) if geometry is None else geometry
    rng = trial_rng(cfg.seed, trial_index)
    J, Q, K = cfg.J, cfg.Q, cfg.K

    drop = drop_users(geo, K, cfg.d_min, rng, J=J)
    assignment = [rng.choice(Q, size=K, replace=False) for _ in range(J)]
    P = cb.select(assignment)
    gains = compute_gains(geo, drop)
    H = draw_channels(gains, cfg.M, rng)

    precoders = []
    for i in range(J):
        Y = uplink_receive(P, H[i], cfg.sigma_u2, rng)
        if cfg.perfect_csi:
            part = partition_groups(gains[i].reshape(-1), i, J, Q, K)
            H_a = H[i][part.group_a]
        else:
            H_a = _estimate_group_a(cfg, P, Y, i)
        precoders.append(zf_precoders(H_a, K))
    return compute_sinr(precoders, H, cfg.sigma_d2, Q)


@dataclass
class CampaignResult:
    config: SimConfig
    trial_indices: np.ndarray            # successful trials, ascending
    rates: np.ndarray                    # (n_ok, J*K) effective rates
    sinr: np.ndarray                     # (n_ok, J*K)
    excluded: list[tuple[int, str]] = field(default_factory=list)

    @property
    def rate_samples(self) -> np.ndarray:
        return self.rates.reshape(-1)

    @property
    def n_samples(self) -> int:
        return int(self.rates.size)

    @property
    def n_excluded_users(self) -> int:
        return len(self.excluded) * self.config.J * self.config.K

    def summary(self) -> dict[str, float]:
        s = self.rate_samples
        if s.size == 0:
            return {"mean": float("nan"), "p5": float("nan"),
                    "p50": float("nan"), "p90": float("nan")}
        p5, p50, p90 = np.percentile(s, [5, 50, 90])
        return {"mean": float(s.mean()), "p5": float(p5), "p50": float(p50), "p90": float(p90)}

    def ecdf(self) -> tuple[np.ndarray, np.ndarray]:
        return ecdf(self.rate_samples)


def _run_chunk(cfg: SimConfig, indices: list[int]):
    cb = campaign_codebook(cfg)
    geo = build_geometry(cfg.R, cfg.alpha)
    out = []
    for t in indices:
        try:
            rs = run_trial(cfg, t, cb, geo)
            out.append((t, rs.effective_rate.reshape(-1), rs.sinr.reshape(-1), None))
        except (RankDeficient, SolverFailure) as exc:
            out.append((t, None, None, f"{type(exc).__name__}: {exc}"))
    return out


def run_campaign(cfg: SimConfig, workers: int = 1, chunk_size: int = 250) -> CampaignResult:
    """Run ``cfg.trials`` trials, optionally across worker processes.

    Trials that fail with ``RankDeficient`` or ``SolverFailure`` are excluded
    and listed in ``CampaignResult.excluded``.
    """
    indices = list(range(cfg.trials))
    if workers <= 1:
        rows = _run_chunk(cfg, indices)
    else:
        chunks = [indices[s:s + chunk_size] for s in range(0, len(indices), chunk_size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [cfg] * len(chunks), chunks)
            rows = [r for part in parts for r in part]
    rows.sort(key=lambda r: r[0])

    n = cfg.J * cfg.K
    ok = [r for r in rows if r[3] is None]
    excluded = [(r[0], r[3]) for r in rows if r[3] is not None]
    for t, msg in excluded:
        log.warning("trial %d excluded: %s", t, msg)
    rates = np.array([r[1] for r in ok]).reshape(len(ok), n)
    sinr = np.array([r[2] for r in ok]).reshape(len(ok), n)
    return CampaignResult(cfg, np.array([r[0] for r in ok], dtype=int), rates, sinr, excluded)


def ecdf(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    return x, np.arange(1, x.size + 1) / max(x.size, 1)


def export_cdf(result: CampaignResult | np.ndarray, path: str | Path) -> None:
    """CSV ``rate_bps_hz,cdf`` sorted by rate, ``cdf = rank / N``."""
    samples = result.rate_samples if isinstance(result, CampaignResult) else result
    x, F = ecdf(samples)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rate_bps_hz", "cdf"])
        for a, b in zip(x, F):
            w.writerow([f"{a:.17g}", f"{b:.17g}"])


def read_cdf(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["rate_bps_hz", "cdf"]:
        raise ValueError(f"unexpected CDF header {rows[0]}")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]]).reshape(-1, 2)
    return data[:, 0], data[:, 1]


def batch_statistic_se(per_trial: np.ndarray, statistic: Callable[[np.ndarray], float],
                       n_batches: int = 50) -> float:
    """Standard error of ``statistic`` by the method of batch means over trials.

    Contiguous trial batches keep the users of one drop together, so the
    within-drop correlation is respected.
    """
    batches = np.array_split(np.asarray(per_trial), n_batches)
    vals = np.array([statistic(b.reshape(-1)) for b in batches if b.size])
    return float(vals.std(ddof=1) / np.sqrt(vals.size))


def paired_difference_se(a: CampaignResult, b: CampaignResult,
                         statistic: Callable[[np.ndarray], float],
                         n_batches: int = 50) -> float:
    """Batch-means standard error of ``statistic(a) - statistic(b)``.

    Both campaigns must share seed and trial count, so each batch covers the
    same drops in both (common random numbers).
    """
    common = np.intersect1d(a.trial_indices, b.trial_indices)
    ra = a.rates[np.isin(a.trial_indices, common)]
    rb = b.rates[np.isin(b.trial_indices, common)]
    ba = np.array_split(ra, n_batches)
    bb = np.array_split(rb, n_batches)
    diffs = np.array([statistic(x.reshape(-1)) - statistic(y.reshape(-1))
                      for x, y in zip(ba, bb) if x.size])
    return float(diffs.std(ddof=1) / np.sqrt(diffs.size))


__all__ = [
    "SimConfig", "CampaignResult", "parse_config", "load_config", "format_config",
    "run_trial", "run_campaign", "export_cdf", "read_cdf", "ecdf",
    "campaign_codebook", "batch_statistic_se", "paired_difference_se", "MubPilotError",
]

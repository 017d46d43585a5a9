"""Compare the compiled and pure-Python NNLS backends.

Problems are the per-BS covariance fits of real simulation trials, so the
active-set sizes match what a campaign sees. A short campaign is also timed
under each backend (in a subprocess, since the backend is fixed at import).

    python benchmarks/bench_nnls.py [--problems 200] [--trials 100]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from mubpilot import nnls
from mubpilot.channel import build_geometry, compute_gains, draw_channels, drop_users, uplink_receive
from mubpilot.estimation import kkt_tolerance, sample_covariance
from mubpilot.metrics import abs2_gram
from mubpilot.simulator import SimConfig, campaign_codebook

CAMPAIGN_SNIPPET = """
import time
from mubpilot import nnls
from mubpilot.simulator import SimConfig, run_campaign
cfg = SimConfig(K={K}, trials={trials}, seed=0)
t0 = time.perf_counter()
run_campaign(cfg)
print(nnls.BACKEND, time.perf_counter() - t0)
"""


def make_problems(K, n, seed=0):
    cfg = SimConfig(K=K, seed=seed)
    rng = np.random.default_rng(seed)
    geo = build_geometry()
    cb = campaign_codebook(cfg)
    out = []
    while len(out) < n:
        P = cb.select([rng.choice(7, K, replace=False) for _ in range(7)])
        gains = compute_gains(geo, drop_users(geo, K, 0.5, rng))
        H = draw_channels(gains, cfg.M, rng)
        for i in range(7):
            R = sample_covariance(uplink_receive(P, H[i], cfg.sigma_u2, rng)) - cfg.sigma_u2 * np.eye(7)
            A = abs2_gram(P.matrix)
            c = np.einsum("qi,qr,ri->i", P.matrix.conj(), R, P.matrix).real
            out.append((A, c, kkt_tolerance(c)))
    return out[:n]


def time_backend(problems, backend, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for A, c, tol in problems:
            nnls.nnls_gram(A, c, tol, 10 * len(c), backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best / len(problems)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problems", type=int, default=200)
    ap.add_argument("--trials", type=int, default=100)
    args = ap.parse_args()

    backends = nnls.available_backends()
    print(f"available backends: {', '.join(backends)} (default {nnls.BACKEND})")
    print(f"{'K':>2} {'n':>3} " + " ".join(f"{b + ' us':>12}" for b in backends) + "  speedup")
    for K in (1, 3, 7):
        probs = make_problems(K, args.problems)
        t = {b: time_backend(probs, b) for b in backends}
        speed = t["python"] / t["compiled"] if "compiled" in t else float("nan")
        print(f"{K:>2} {7 * K:>3} " + " ".join(f"{t[b] * 1e6:12.1f}" for b in backends)
              + f"  {speed:6.1f}x")

    print(f"\ncampaign wall time, K=3, {args.trials} trials")
    for force in ("0", "1"):
        env = dict(os.environ, MUBPILOT_PURE_PYTHON=force)
        code = CAMPAIGN_SNIPPET.format(K=3, trials=args.trials)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        print(f"  {out[0]:>8}: {float(out[1]):.2f} s")


if __name__ == "__main__":
    main()

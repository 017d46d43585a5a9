"""Command-line entry point: ``mubpilot {simulate,certify,make-codebook,geometry}``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime failure
(including a codebook that fails certification).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from . import metrics
from .channel import build_geometry
from .codebook import (CodebookKind, build_codebook, invariant_failures, read_codebook,
                       validate, write_codebook)
from .errors import ConfigError, MubPilotError
from .simulator import export_cdf, load_config, run_campaign

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.trials is not None:
            overrides["trials"] = args.trials
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            cfg = cfg.replace(**overrides)
    except (OSError, ConfigError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run_campaign(cfg, workers=args.workers)
    if args.out:
        export_cdf(result, args.out)
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(["rate_bps_hz", "cdf"])
        x, F = result.ecdf()
        for a, b in zip(x, F):
            writer.writerow([f"{a:.17g}", f"{b:.17g}"])
    s = result.summary()
    print(f"samples={result.n_samples} excluded_trials={len(result.excluded)} "
          f"mean={s['mean']:.6g} p5={s['p5']:.6g} p50={s['p50']:.6g} p90={s['p90']:.6g}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_certify(args) -> int:
    try:
        cb = read_codebook(args.codebook)
    except (OSError, ValueError) as exc:
        print(f"cannot read codebook: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = validate(cb)
    spec = metrics.spectrum(metrics.abs2_gram(cb.matrix))
    print(f"kind {cb.kind.value} Q={cb.Q} J={cb.J} K={cb.K}")
    print(f"c1_residual {report.c1_residual:.6e}")
    print(f"coherence {report.coherence:.12f}")
    if cb.J >= 2:
        print(f"welch_bound {metrics.welch_type_bound(cb.J, cb.Q, cb.K):.12f}")
    else:
        print("welch_bound n/a")
    print(f"entry_amplitude_spread {report.entry_amplitude_spread:.6e}")
    print(f"noise_enhancement {spec.trace_pinv:.12f}")
    ev = spec.eigenvalues
    print(f"spectrum rank={spec.numerical_rank} max={ev[0]:.12g} "
          f"min_nonzero={ev[spec.numerical_rank - 1]:.12g}")
    failures = invariant_failures(cb, report)
    print("status " + ("PASS" if not failures else "FAIL " + ",".join(failures)))
    return EXIT_OK if not failures else EXIT_RUNTIME


def _cmd_make_codebook(args) -> int:
    try:
        kind = CodebookKind.parse(args.kind)
        cb = build_codebook(kind, args.q, args.j, np.random.default_rng(args.seed))
    except (ValueError, MubPilotError) as exc:
        print(f"cannot build codebook: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_codebook(cb, args.out)
    return EXIT_OK


def _cmd_geometry(args) -> int:
    try:
        geo = build_geometry(args.radius, args.alpha)
    except MubPilotError as exc:
        print(f"invalid geometry: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["type", "index", "x_m", "y_m"])
        for i, (x, y) in enumerate(geo.bs_positions):
            w.writerow(["bs", i, f"{x:.17g}", f"{y:.17g}"])
        for i, (x, y) in enumerate(geo.wrap_translations):
            w.writerow(["wrap", i, f"{x:.17g}", f"{y:.17g}"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mubpilot", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a Monte Carlo campaign and write the rate CDF")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("certify", help="report codebook metrics and check its invariants")
    p.add_argument("--codebook", required=True)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("make-codebook", help="construct a codebook and write it as text")
    p.add_argument("--kind", required=True, choices=[k.value for k in CodebookKind])
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_make_codebook)

    p = sub.add_parser("geometry", help="dump BS positions and wrap translations as CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--alpha", type=float, default=2.5)
    p.set_defaults(func=_cmd_geometry)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MubPilotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

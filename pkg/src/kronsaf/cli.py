"""Command-line harness.

Subcommands: identify, aec, anc, anc-multi (run a configured experiment),
calibrate-rho (derive the switch threshold from a factored run),
decompose (Kronecker-factor an impulse response file), noisegen
(write a noise file). Exit codes: 0 success, 1 every trial diverged,
2 invalid configuration or arguments.
"""

import argparse
import sys

import numpy as np

from .config import load_config
from .errors import ConfigError, KronsafError
from .experiment import run_calibration, run_experiment
from .nkp import nkp_decompose
from .noise import ArOneParams, cauchy_driver, sample_alpha_stable, sample_ar1, AlphaStableParams
from .signals import load_signal, save_signal

__all__ = ["main"]


def _add_run_flags(sub):
    sub.add_argument("--config", required=True, help="flat key-value config file")
    sub.add_argument("--seed", type=int, default=None, help="override the config seed")
    sub.add_argument("--jobs", type=int, default=1, help="concurrent trials")
    sub.add_argument("--out", default=None, help="override the config output path")
    sub.add_argument(
        "--allow-unstable-beta",
        action="store_true",
        help="skip the fractional-order stability interval check",
    )
    sub.add_argument(
        "--no-normalize",
        action="store_true",
        help="do not peak-normalize file-based input recordings",
    )


def _load_run_config(args, force_scenario=None):
    cfg = load_config(args.config)
    if force_scenario is not None:
        cfg.scenario = force_scenario
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.allow_unstable_beta:
        cfg.strict_frac_order = False
    if args.no_normalize:
        cfg.normalize_input = False
    return cfg


def _cmd_run(args, scenario):
    cfg = _load_run_config(args, force_scenario=scenario)
    curve, manifest = run_experiment(cfg, jobs=args.jobs)
    final = curve.values_db[-1] if curve.values_db.size else float("nan")
    print(
        f"{scenario}: {cfg.algorithm}, {cfg.trials} trial(s), "
        f"{curve.divergent_trials} divergent, final {final:.3f} dB"
    )
    if cfg.out:
        print(f"wrote {cfg.out} and {cfg.out}.manifest.json")
    if curve.divergent_trials == cfg.trials:
        print("every trial diverged", file=sys.stderr)
        return 1
    return 0


def _cmd_calibrate(args):
    cfg = _load_run_config(args)
    threshold, curve, _ = run_calibration(cfg, jobs=args.jobs, window=args.window)
    print(f"calibrated switch threshold: {threshold:.9g} dB")
    if cfg.out:
        print(f"wrote {cfg.out} and {cfg.out}.rho")
    if curve.divergent_trials == cfg.trials:
        print("every trial diverged", file=sys.stderr)
        return 1
    return 0


def _cmd_decompose(args):
    if args.seg_len * args.n_seg <= 0:
        raise ConfigError("field 'seg_len'/'n_seg' must be positive")
    m = load_signal(args.input)
    if m.size != args.seg_len * args.n_seg:
        raise ConfigError(
            f"field 'seg_len'*'n_seg' = {args.seg_len * args.n_seg} does not match the "
            f"{m.size}-tap response in '{args.input}'"
        )
    max_rank = min(args.seg_len, args.n_seg)
    rank = args.rank if args.rank is not None else max_rank
    if not 1 <= rank <= max_rank:
        raise ConfigError(f"field 'rank' must lie in [1, {max_rank}], got {rank}")

    factors, _ = nkp_decompose(m, args.seg_len, args.n_seg, max_rank)
    lines = ["rank,singular_value,omega"]
    norms = np.linalg.norm(factors.long, axis=1) * np.linalg.norm(factors.short, axis=1)
    total = np.linalg.norm(m)
    for q in range(1, max_rank + 1):
        tail = np.sqrt(np.sum(norms[q:] ** 2))
        lines.append(f"{q},{norms[q - 1]:.9g},{tail / total:.9g}")
    with open(f"{args.out}_spectrum.csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")

    chosen, omega = nkp_decompose(m, args.seg_len, args.n_seg, rank)
    np.savetxt(f"{args.out}_long.txt", chosen.long.T, fmt="%.17g")
    np.savetxt(f"{args.out}_short.txt", chosen.short.T, fmt="%.17g")
    print(
        f"decomposed {m.size} taps as {args.seg_len}x{args.n_seg}, rank {rank}: "
        f"omega = {omega:.9g}"
    )
    print(f"wrote {args.out}_spectrum.csv, {args.out}_long.txt, {args.out}_short.txt")
    return 0


def _cmd_noisegen(args):
    if args.n < 0:
        raise ConfigError(f"field 'n' must be >= 0, got {args.n}")
    if args.kind == "alpha-stable":
        if args.n == 0:
            values = np.empty(0)
        else:
            values = sample_alpha_stable(
                AlphaStableParams(alpha=args.alpha, gamma=args.gamma, seed=args.seed), args.n
            )
    elif args.kind == "gaussian-ar1":
        params = ArOneParams(pole=args.pole, variance=args.variance, seed=args.seed)
        values = sample_ar1(params, args.n)
    else:  # cauchy-ar1
        params = ArOneParams(pole=args.pole, seed=args.seed)
        values = sample_ar1(params, args.n, driver=cauchy_driver(args.gamma))
    save_signal(args.out, values)
    print(f"wrote {args.n} samples to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kronsaf",
        description="Subband adaptive filtering experiments with Kronecker-factored weights",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    for name, blurb in (
        ("identify", "system identification run"),
        ("aec", "echo-path identification run"),
        ("anc", "single-point control run"),
        ("anc-multi", "multi-source multi-mic control run"),
    ):
        sub = subs.add_parser(name, help=blurb)
        _add_run_flags(sub)

    cal = subs.add_parser("calibrate-rho", help="derive the switch threshold")
    _add_run_flags(cal)
    cal.add_argument("--window", type=int, default=None, help="steady-state averaging window")

    dec = subs.add_parser("decompose", help="Kronecker-factor an impulse response file")
    dec.add_argument("--input", required=True, help=".txt or .f64 impulse response")
    dec.add_argument("--seg-len", type=int, required=True, dest="seg_len")
    dec.add_argument("--n-seg", type=int, required=True, dest="n_seg")
    dec.add_argument("--rank", type=int, default=None)
    dec.add_argument("--out", required=True, help="output path prefix")

    gen = subs.add_parser("noisegen", help="write a noise signal file")
    gen.add_argument("--kind", choices=("alpha-stable", "gaussian-ar1", "cauchy-ar1"),
                     default="alpha-stable")
    gen.add_argument("--alpha", type=float, default=1.5)
    gen.add_argument("--gamma", type=float, default=1.0 / 60.0)
    gen.add_argument("--pole", type=float, default=0.9)
    gen.add_argument("--variance", type=float, default=1.0)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help=".txt or .f64 output file")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("identify", "aec", "anc", "anc-multi"):
            return _cmd_run(args, args.command)
        if args.command == "calibrate-rho":
            return _cmd_calibrate(args)
        if args.command == "decompose":
            return _cmd_decompose(args)
        return _cmd_noisegen(args)
    except KronsafError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

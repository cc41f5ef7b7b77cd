"""Config-driven Monte Carlo experiments.

Trial i draws its randomness from numpy SeedSequence(seed + i), split
into an input stream and a disturbance stream, so any trial can be
reproduced in isolation and results do not depend on --jobs. Outputs:
an aggregated learning-curve CSV plus a JSON manifest written next to
it (same basename + '.manifest.json'), both written atomically.
"""

import json
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .anc import AncScenario, MultiAncScenario, make_fx_engine, run_anc_multi, run_anc_single
from .config import (
    algo_config,
    config_as_dict,
    resolve_indexed_taps,
    resolve_taps,
    validate_config,
)
from .engines import calibrate_switch_db, make_engine
from .errors import ConfigError
from .filterbank import design_bank, subband_signals
from .metrics import LearningCurve, RATIO_FLOOR, aggregate_trials, nmsd_ratio, write_curve_csv
from .noise import ArOneParams, alpha_stable_draws, cauchy_driver, load_recording, sample_ar1

__all__ = ["run_experiment", "run_calibration", "run_trial"]

_IDENTITY_BANK = np.ones((1, 1))


def _input_signal(cfg, n, seed_seq):
    rng = np.random.default_rng(seed_seq)
    if cfg.input == "gaussian-ar1":
        params = ArOneParams(pole=cfg.ar_pole, variance=cfg.input_variance)
        return sample_ar1(params, n, rng=rng)
    if cfg.input == "cauchy-ar1":
        params = ArOneParams(pole=cfg.ar_pole)
        return sample_ar1(params, n, driver=cauchy_driver(cfg.input_gamma), rng=rng)
    x = load_recording(cfg.input_file, normalize=cfg.normalize_input)
    if x.size < n:
        raise ConfigError(
            f"field 'samples'={n} exceeds the {x.size} samples in '{cfg.input_file}'"
        )
    return x[:n]


def _disturbance(cfg, n, seed_seq):
    if cfg.noise_alpha is None:
        return None
    rng = np.random.default_rng(seed_seq)
    return alpha_stable_draws(cfg.noise_alpha, cfg.noise_gamma, n, rng)


def _bank_and_interval(cfg):
    if cfg.algorithm in ("nlms", "fxlms"):
        # Fullband per-sample baselines: single-impulse "bank", every sample.
        return _IDENTITY_BANK, 1
    return design_bank(cfg.n_subbands, cfg.bank_taps), cfg.update_interval


def _filter_len(cfg, reference=None):
    flen = cfg.filter_len
    if flen is None:
        flen = reference.size if reference is not None else cfg.seg_len * cfg.n_seg
    if reference is not None and flen != reference.size:
        raise ConfigError(
            f"field 'filter_len'={flen} differs from the {reference.size}-tap system"
        )
    factored = "nkp" in cfg.algorithm
    if factored and flen != cfg.seg_len * cfg.n_seg:
        raise ConfigError(
            f"field 'filter_len'={flen} must equal seg_len*n_seg="
            f"{cfg.seg_len * cfg.n_seg} for factored engines"
        )
    return flen


def _resolved_switch_db(cfg):
    if cfg.switch_db is not None:
        return cfg.switch_db
    if cfg.switch_db_file is not None:
        try:
            with open(cfg.switch_db_file) as fh:
                return float(fh.read().strip())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"field 'switch_db_file': cannot read threshold: {exc}") from exc
    return None


def _reversed_ext(rows, depth):
    rows = np.atleast_2d(rows)
    pad = np.zeros((rows.shape[0], depth - 1))
    return np.concatenate([rows[:, ::-1], pad], axis=1)


def _identify_trial(cfg, trial):
    seq = np.random.SeedSequence(cfg.seed + trial)
    in_seq, noise_seq = seq.spawn(2)
    n = cfg.samples
    m0 = resolve_taps(cfg, "system", required=True)
    flen = _filter_len(cfg, reference=m0)
    bank, interval = _bank_and_interval(cfg)

    x = _input_signal(cfg, n, in_seq)
    d = np.convolve(x, m0)[:n]
    if cfg.flip_at and cfg.flip_at < n:
        d[cfg.flip_at :] = -d[cfg.flip_at :]
    v = _disturbance(cfg, n, noise_seq)
    if v is not None:
        d = d + v

    x_sub_ext = _reversed_ext(subband_signals(x, bank), flen)
    d_sub = subband_signals(d, bank)

    acfg = algo_config(cfg)
    acfg.switch_db = _resolved_switch_db(cfg)
    engine = make_engine(cfg.algorithm, flen, acfg)

    updates = range(0, n, interval)
    curve = np.empty(len(updates))
    m0_norm = np.linalg.norm(m0)
    for i, k in enumerate(updates):
        base = n - 1 - k
        engine.step(x_sub_ext[:, base : base + flen], d_sub=d_sub[:, k])
        if engine.diverged:
            curve[i:] = curve[i - 1] if i else 1.0
            return curve, True
        target = -m0 if (cfg.flip_at and k >= cfg.flip_at) else m0
        ratio = float(np.linalg.norm(target - engine.coefficients) / m0_norm)
        curve[i] = ratio
        engine.observe_metric(20.0 * np.log10(max(ratio, RATIO_FLOOR)))
    return curve, False


def _anc_scenario(cfg):
    return AncScenario(
        primary=resolve_taps(cfg, "primary", required=True),
        secondary=resolve_taps(cfg, "secondary", required=True),
        secondary_model=resolve_taps(cfg, "secondary_model"),
    )


def _anc_trial(cfg, trial):
    seq = np.random.SeedSequence(cfg.seed + trial)
    (in_seq,) = seq.spawn(1)
    scenario = _anc_scenario(cfg)
    flen = _filter_len(cfg)
    bank, interval = _bank_and_interval(cfg)
    x = _input_signal(cfg, cfg.samples, in_seq)
    acfg = algo_config(cfg)
    acfg.switch_db = _resolved_switch_db(cfg)
    engine = make_fx_engine(cfg.algorithm, flen, acfg)
    return run_anc_single(x, scenario, engine, bank, interval)


def _multi_scenario(cfg):
    has_indexed = bool(cfg.indexed_paths)
    if not has_indexed and cfg.n_sources == 1 and cfg.n_mics == 1:
        single = _anc_scenario(cfg)
        return MultiAncScenario(
            primaries=[single.primary],
            secondaries=[[single.secondary]],
            secondary_models=[[single.secondary_model]],
        )
    primaries = [resolve_indexed_taps(cfg, "primary", str(c + 1)) for c in range(cfg.n_mics)]
    secondaries = [
        [resolve_indexed_taps(cfg, "secondary", f"{v + 1}_{c + 1}") for c in range(cfg.n_mics)]
        for v in range(cfg.n_sources)
    ]
    models = None
    if any(key.startswith("secondary_model") for key in cfg.indexed_paths):
        models = [
            [
                resolve_indexed_taps(cfg, "secondary_model", f"{v + 1}_{c + 1}")
                for c in range(cfg.n_mics)
            ]
            for v in range(cfg.n_sources)
        ]
    return MultiAncScenario(primaries=primaries, secondaries=secondaries, secondary_models=models)


def _anc_multi_trial(cfg, trial):
    seq = np.random.SeedSequence(cfg.seed + trial)
    (in_seq,) = seq.spawn(1)
    scenario = _multi_scenario(cfg)
    flen = _filter_len(cfg)
    bank, interval = _bank_and_interval(cfg)
    x = _input_signal(cfg, cfg.samples, in_seq)
    acfg = algo_config(cfg)
    acfg.switch_db = _resolved_switch_db(cfg)
    engines = [
        make_fx_engine(cfg.algorithm, flen, acfg) for _ in range(scenario.n_sources)
    ]
    return run_anc_multi(x, scenario, engines, bank, interval)


def run_trial(cfg, trial):
    """One seeded trial; returns (linear ratio curve, diverged flag)."""
    if cfg.scenario in ("identify", "aec"):
        return _identify_trial(cfg, trial)
    if cfg.scenario == "anc":
        return _anc_trial(cfg, trial)
    if cfg.scenario == "anc-multi":
        return _anc_multi_trial(cfg, trial)
    raise ConfigError(f"field 'scenario' has unknown value '{cfg.scenario}'")


def _trial_task(args):
    cfg, trial = args
    return run_trial(cfg, trial)


def _atomic_write(path, writer):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _atomic_text(path, text):
    def writer(tmp):
        with open(tmp, "w") as fh:
            fh.write(text)

    _atomic_write(path, writer)


def run_experiment(cfg, jobs=1, out=None):
    """Run all trials, aggregate, optionally write CSV + manifest.

    Returns (LearningCurve, manifest dict). `out` overrides cfg.out.
    """
    validate_config(cfg)
    out = out if out is not None else cfg.out
    start = time.monotonic()

    tasks = [(cfg, t) for t in range(cfg.trials)]
    if jobs > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=int(jobs)) as pool:
            results = list(pool.map(_trial_task, tasks))
    else:
        results = [_trial_task(t) for t in tasks]

    curves = np.stack([r[0] for r in results])
    flags = [r[1] for r in results]
    stride = 1
    if cfg.scenario in ("identify", "aec"):
        stride = 1 if cfg.algorithm == "nlms" else cfg.update_interval
    curve = aggregate_trials(curves, flags, record_stride=stride)

    manifest = {
        "version": __version__,
        "config": config_as_dict(cfg),
        "record_stride": stride,
        "switch_db_resolved": _resolved_switch_db(cfg),
        "divergent_flags": [bool(f) for f in flags],
        "divergent_trials": curve.divergent_trials,
        "wall_time_s": round(time.monotonic() - start, 3),
    }
    if out:
        _atomic_write(out, lambda tmp: write_curve_csv(tmp, curve))
        _atomic_text(out + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return curve, manifest


def run_calibration(cfg, jobs=1, out=None, window=None):
    """Steady-state threshold from a factored-engine run.

    Runs the configured experiment (algorithm must be factored,
    non-switching), averages the last `window` dB values, and writes the
    threshold into '<out>.rho' for a later switch_db_file reference.
    Returns (threshold_db, LearningCurve, manifest).
    """
    if not cfg.algorithm.startswith("nkp-"):
        raise ConfigError(
            f"field 'algorithm' must be a factored (nkp-) engine to calibrate, got "
            f"'{cfg.algorithm}'"
        )
    window = cfg.calib_window if window is None else int(window)
    if window < 1:
        raise ConfigError(f"field 'calib_window' must be >= 1, got {window}")
    curve, manifest = run_experiment(cfg, jobs=jobs, out=out)
    threshold = calibrate_switch_db(curve.values_db, window=window)
    manifest["calib_window_requested"] = window
    manifest["calib_window_used"] = max(1, min(window, curve.values_db.size // 2))
    manifest["switch_db_calibrated"] = threshold
    out = out if out is not None else cfg.out
    if out:
        _atomic_text(out + ".rho", f"{threshold:.9g}\n")
        _atomic_text(out + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return threshold, curve, manifest

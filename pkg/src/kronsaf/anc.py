"""Feedforward control loops with filtered references.

The physical residual always uses the TRUE secondary path(s); the model
path(s) only prefilter the reference for the weight updates. Controller
weights change exclusively at update instants (per-sample engines excepted),
so the loop output between instants uses frozen weights.
"""

from dataclasses import dataclass

import numpy as np

from .engines import TnkpEngine, FonspnEngine, NkpFonspnEngine, NkpNspnEngine, _EngineBase
from .errors import DimensionError, ParameterError
from .filterbank import subband_signals
from .metrics import AnrTracker, MultiAnrTracker
from .signals import as_taps

__all__ = [
    "AncScenario",
    "MultiAncScenario",
    "FxLmsEngine",
    "FX_ENGINE_NAMES",
    "make_fx_engine",
    "run_anc_single",
    "run_anc_multi",
]


@dataclass
class AncScenario:
    """Single-point control: primary path, true and modeled secondary paths."""

    primary: np.ndarray
    secondary: np.ndarray
    secondary_model: np.ndarray | None = None

    def __post_init__(self):
        self.primary = as_taps(self.primary)
        self.secondary = as_taps(self.secondary)
        if self.secondary_model is None:
            self.secondary_model = self.secondary.copy()
        else:
            self.secondary_model = as_taps(self.secondary_model)


@dataclass
class MultiAncScenario:
    """n_sources loudspeakers to n_mics sensors; paths indexed [source][mic]."""

    primaries: list
    secondaries: list
    secondary_models: list | None = None

    def __post_init__(self):
        self.primaries = [as_taps(p) for p in self.primaries]
        self.secondaries = [[as_taps(s) for s in row] for row in self.secondaries]
        n_mics = len(self.primaries)
        for row in self.secondaries:
            if len(row) != n_mics:
                raise DimensionError("every source needs one secondary path per mic")
        if self.secondary_models is None:
            self.secondary_models = [[s.copy() for s in row] for row in self.secondaries]
        else:
            self.secondary_models = [[as_taps(s) for s in row] for row in self.secondary_models]
            if len(self.secondary_models) != len(self.secondaries) or any(
                len(row) != n_mics for row in self.secondary_models
            ):
                raise DimensionError("model paths must mirror the true path grid")

    @property
    def n_sources(self):
        return len(self.secondaries)

    @property
    def n_mics(self):
        return len(self.primaries)


class FxLmsEngine(_EngineBase):
    """Plain per-sample LMS on the filtered reference (the baseline)."""

    per_sample = True

    def __init__(self, filter_len, cfg):
        super().__init__()
        self.mu = cfg.mu
        self.w = np.zeros(int(filter_len))

    @property
    def coefficients(self):
        return self.w

    def sample_update(self, xprime_vec, e):
        if self.diverged:
            return
        with np.errstate(over="ignore", invalid="ignore"):
            w_new = self.w + self.mu * e * xprime_vec
        if np.all(np.isfinite(w_new)):
            self.w = w_new
        else:
            self.diverged = True


def _make_fx_tnkp(filter_len, cfg):
    return TnkpEngine(NkpFonspnEngine(filter_len, cfg), cfg)


FX_ENGINE_NAMES = {
    "fxlms": FxLmsEngine,
    "fxfonspn": FonspnEngine,
    "nkp-fxnspn": NkpNspnEngine,
    "nkp-fxfonspn": NkpFonspnEngine,
    "tnkp-fxfonspn": _make_fx_tnkp,
}


def make_fx_engine(name, filter_len, cfg):
    try:
        factory = FX_ENGINE_NAMES[name]
    except KeyError:
        raise ParameterError(
            f"unknown control engine '{name}'; choose from {sorted(FX_ENGINE_NAMES)}"
        ) from None
    return factory(int(filter_len), cfg)


def _rev_ext(sig, depth):
    """Reversed signal padded so newest-first windows are plain slices."""
    sig = np.atleast_2d(sig)
    pad = np.zeros((sig.shape[0], depth - 1))
    return np.concatenate([sig[:, ::-1], pad], axis=1)


def run_anc_single(x, scenario, engine, bank, update_interval, eta=0.999):
    """Drive one control loop; returns (anr_ratio_curve, diverged).

    The curve holds the smoothed residual/disturbance ratio per sample.
    A divergent engine freezes the curve at its last value.
    """
    x = as_taps(x)
    n = x.size
    d = np.convolve(x, scenario.primary)[:n]
    xprime = np.convolve(x, scenario.secondary_model)[:n]
    flen = engine.coefficients.size
    taps = bank.shape[0]

    xp_sub_ext = None if engine.per_sample else _rev_ext(subband_signals(xprime, bank), flen)
    x_ext = _rev_ext(x, flen)[0]
    xp_ext = _rev_ext(xprime, flen)[0]

    s_true = scenario.secondary
    ybuf = np.zeros(s_true.size)
    ewin = np.zeros(taps)
    tracker = AnrTracker(eta=eta)
    curve = np.empty(n)

    for k in range(n):
        base = n - 1 - k
        w = engine.coefficients
        ybar = float(np.dot(w, x_ext[base : base + flen]))
        ybuf[1:] = ybuf[:-1]
        ybuf[0] = ybar
        y = float(np.dot(s_true, ybuf))
        e = d[k] - y
        curve[k] = tracker.update(e, d[k])
        ewin[1:] = ewin[:-1]
        ewin[0] = e
        if engine.per_sample:
            engine.sample_update(xp_ext[base : base + flen], e)
        elif k % update_interval == 0:
            frame = xp_sub_ext[:, base : base + flen]
            engine.step(frame, e_sub=ewin @ bank)
            engine.observe_metric(tracker.db)
        if engine.diverged:
            curve[k + 1 :] = curve[k]
            break
    return curve, bool(engine.diverged)


def run_anc_multi(x, scenario, engines, bank, update_interval, eta=0.999):
    """Multi-source, multi-mic control loop.

    One engine per source; each engine's update stacks the (mic, subband)
    terms of every error mic as extra subband rows, with that mic's own
    model-filtered reference. Returns (channel-averaged ratio curve,
    any_diverged).
    """
    x = as_taps(x)
    n = x.size
    n_src = scenario.n_sources
    n_mic = scenario.n_mics
    if len(engines) != n_src:
        raise DimensionError("need exactly one engine per source")
    flen = engines[0].coefficients.size
    taps = bank.shape[0]
    n_sub = bank.shape[1]

    d = np.stack([np.convolve(x, p)[:n] for p in scenario.primaries])

    per_sample = any(eng.per_sample for eng in engines)
    if per_sample and not all(eng.per_sample for eng in engines):
        raise ParameterError("cannot mix per-sample and block-update engines")

    # Model-filtered references per (source, mic): raw for per-sample
    # engines, subband-decomposed for block updates.
    xp_raw_ext = np.empty((n_src, n_mic, n + flen - 1))
    xp_sub_ext = None if per_sample else np.empty((n_src, n_mic, n_sub, n + flen - 1))
    for v in range(n_src):
        for c in range(n_mic):
            xp = np.convolve(x, scenario.secondary_models[v][c])[:n]
            xp_raw_ext[v, c] = _rev_ext(xp, flen)[0]
            if xp_sub_ext is not None:
                xp_sub_ext[v, c] = _rev_ext(subband_signals(xp, bank), flen)

    x_ext = _rev_ext(x, flen)[0]

    s_len = max(s.size for row in scenario.secondaries for s in row)
    s_true = np.zeros((n_src, n_mic, s_len))
    for v in range(n_src):
        for c in range(n_mic):
            taps_vc = scenario.secondaries[v][c]
            s_true[v, c, : taps_vc.size] = taps_vc

    ybuf = np.zeros((n_src, s_len))
    ewin = np.zeros((n_mic, taps))
    tracker = MultiAnrTracker(n_mic, eta=eta)
    curve = np.empty(n)
    weights = np.stack([eng.coefficients for eng in engines])

    for k in range(n):
        base = n - 1 - k
        xvec = x_ext[base : base + flen]
        # Per-row dots instead of one matmul so the V=C=1 case reproduces
        # the single-channel loop's float path exactly.
        for v in range(n_src):
            ybar_v = float(np.dot(weights[v], xvec))
            ybuf[v, 1:] = ybuf[v, :-1]
            ybuf[v, 0] = ybar_v
        y = np.empty(n_mic)
        for c in range(n_mic):
            acc = 0.0
            for v in range(n_src):
                acc += float(np.dot(s_true[v, c], ybuf[v]))
            y[c] = acc
        e = d[:, k] - y
        curve[k] = tracker.update(e, d[:, k])
        ewin[:, 1:] = ewin[:, :-1]
        ewin[:, 0] = e
        stepped = False
        if per_sample:
            for v, eng in enumerate(engines):
                for c in range(n_mic):
                    eng.sample_update(xp_raw_ext[v, c, base : base + flen], float(e[c]))
            stepped = True
        elif k % update_interval == 0:
            e_stack = np.concatenate([ewin[c] @ bank for c in range(n_mic)])
            for v, eng in enumerate(engines):
                frame = xp_sub_ext[v, :, :, base : base + flen].reshape(n_mic * n_sub, flen)
                eng.step(frame, e_sub=e_stack)
                eng.observe_metric(tracker.db)
            stepped = True
        if stepped:
            if any(eng.diverged for eng in engines):
                curve[k + 1 :] = curve[k]
                return curve, True
            weights = np.stack([eng.coefficients for eng in engines])
    return curve, False

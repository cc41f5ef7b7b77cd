"""Subband adaptive engines: p-norm, fractional-order, Kronecker-factored.

All engines share one step contract: ``step(x_sub, d_sub=None, e_sub=None)``
where ``x_sub`` is the (n_subbands, filter_len) matrix of subband input
vectors at an update instant. With ``d_sub`` the engine forms its own
subband errors from its current weights (identification / echo paths);
with ``e_sub`` the errors are taken as given (measured residuals, the
filtered-reference case). Between update instants the weights are
frozen by construction — a step is only ever applied at update instants.

A step that produces any non-finite weight is rolled back; the engine
marks itself divergent and ignores further steps.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError
from .nkp import KronFactors, filtered_input_left, filtered_input_right, kron_synthesize

__all__ = [
    "AlgoConfig",
    "g_error",
    "frac_power_real",
    "p_norm_p",
    "frac_order_bound",
    "calibrate_switch_db",
    "make_engine",
    "ENGINE_NAMES",
    "NsafEngine",
    "NspnEngine",
    "FonspnEngine",
    "NkpNspnEngine",
    "NkpFonspnEngine",
    "TnkpEngine",
]

_DEF_EPS = 1e-8


def g_error(e, p, order):
    """Error nonlinearity sign(e)*|e|**(p-order), with 0 mapped to 0."""
    e = np.asarray(e, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.sign(e) * np.abs(e) ** (p - order)
    out = np.where(e == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def frac_power_real(x, order):
    """Real part of (-x)**order on the principal branch, elementwise.

    Negative x gives |x|**order (positive real base); positive x gives
    |x|**order * cos(pi*order); zero gives zero. At order=1 this is
    exactly -x.
    """
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        mag = np.abs(x) ** order
    out = np.where(x < 0.0, mag, mag * np.cos(np.pi * order))
    out = np.where(x == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def p_norm_p(v, p):
    """sum(|v_i|**p) — the p-th power of the p-norm."""
    v = np.asarray(v, dtype=np.float64)
    with np.errstate(over="ignore"):
        return float(np.sum(np.abs(v) ** p))


def frac_order_bound(p, noise_alpha):
    """Admissible fractional-order interval (low, high]: (p - alpha/2, p]."""
    if not 0.0 < noise_alpha <= 2.0:
        raise ParameterError(f"noise alpha must lie in (0, 2], got {noise_alpha}")
    return (p - noise_alpha / 2.0, p)


@dataclass
class AlgoConfig:
    """Shared knobs for every engine; irrelevant fields are ignored.

    filter_len is the adaptive length; for factored engines it must
    equal seg_len*n_seg. init_method 'impulse' places init_scale in the
    first factor entry, 'flat' spreads it across all entries.
    """

    mu: float = 0.01
    mu_b: float | None = None
    p_order: float = 1.4
    frac_order: float = 1.1
    rank: int = 2
    seg_len: int = 8
    n_seg: int = 8
    n_subbands: int = 4
    bank_taps: int = 33
    update_interval: int = 4
    switch_db: float | None = None
    init_scale: float = 7e-4
    init_method: str = "impulse"
    reg_eps: float = _DEF_EPS
    strict_frac_order: bool = True

    def validate(self, engine=None, noise_alpha=None):
        """Range checks; names the offending field in the message."""
        if not self.mu > 0.0:
            raise ParameterError(f"field 'mu' must be positive, got {self.mu}")
        if self.mu_b is not None and not self.mu_b > 0.0:
            raise ParameterError(f"field 'mu_b' must be positive, got {self.mu_b}")
        if not self.p_order >= 0.0:
            raise ParameterError(f"field 'p_order' must be >= 0, got {self.p_order}")
        if not self.frac_order > 0.0:
            raise ParameterError(f"field 'frac_order' must be positive, got {self.frac_order}")
        if self.rank < 1 or self.seg_len < 1 or self.n_seg < 1:
            raise ParameterError("fields 'rank', 'seg_len', 'n_seg' must be >= 1")
        if self.rank > min(self.seg_len, self.n_seg):
            raise ParameterError(
                f"field 'rank' must be <= min(seg_len, n_seg) = {min(self.seg_len, self.n_seg)}"
            )
        if self.update_interval < 1:
            raise ParameterError("field 'update_interval' must be >= 1")
        if self.init_method not in ("impulse", "flat"):
            raise ParameterError(
                f"field 'init_method' must be 'impulse' or 'flat', got '{self.init_method}'"
            )
        if not self.init_scale > 0.0:
            raise ParameterError(f"field 'init_scale' must be positive, got {self.init_scale}")
        if not self.reg_eps > 0.0:
            raise ParameterError(f"field 'reg_eps' must be positive, got {self.reg_eps}")
        uses_frac = engine is None or "fonspn" in engine
        if (
            self.strict_frac_order
            and uses_frac
            and noise_alpha is not None
        ):
            low, high = frac_order_bound(self.p_order, noise_alpha)
            if not low < self.frac_order <= high:
                raise ParameterError(
                    f"field 'frac_order'={self.frac_order} outside the stable interval "
                    f"({low:.6g}, {high:.6g}] for p_order={self.p_order}, "
                    f"noise alpha={noise_alpha}; rerun with --allow-unstable-beta to override"
                )


class _EngineBase:
    """Shared divergence bookkeeping and the SI-mode error hook."""

    per_sample = False

    def __init__(self):
        self.diverged = False

    @property
    def coefficients(self):
        raise NotImplementedError

    def subband_errors(self, x_sub, d_sub):
        w = self.coefficients
        return np.asarray(d_sub, dtype=np.float64) - x_sub @ w

    def observe_metric(self, value_db):
        """Hook for threshold-switched variants; default is a no-op."""

    def _resolve_errors(self, x_sub, d_sub, e_sub):
        if (d_sub is None) == (e_sub is None):
            raise ParameterError("step needs exactly one of d_sub or e_sub")
        if e_sub is not None:
            return np.asarray(e_sub, dtype=np.float64)
        return self.subband_errors(x_sub, d_sub)


class NsafEngine(_EngineBase):
    """Normalized subband update with Euclidean normalization."""

    def __init__(self, filter_len, cfg):
        super().__init__()
        self.mu = cfg.mu
        self.eps = cfg.reg_eps
        self.w = np.zeros(int(filter_len))

    @property
    def coefficients(self):
        return self.w

    def step(self, x_sub, d_sub=None, e_sub=None):
        if self.diverged:
            return
        e = self._resolve_errors(x_sub, d_sub, e_sub)
        with np.errstate(over="ignore", invalid="ignore"):
            den = np.einsum("jd,jd->j", x_sub, x_sub) + self.eps
            w_new = self.w + x_sub.T @ (self.mu * e / den)
        if np.all(np.isfinite(w_new)):
            self.w = w_new
        else:
            self.diverged = True


class NspnEngine(_EngineBase):
    """p-norm subband update: scales by sign(e)|e|**(p-1) / sum|x|**p."""

    def __init__(self, filter_len, cfg):
        super().__init__()
        self.mu = cfg.mu
        self.p = cfg.p_order
        self.eps = cfg.reg_eps
        self.w = np.zeros(int(filter_len))

    @property
    def coefficients(self):
        return self.w

    def step(self, x_sub, d_sub=None, e_sub=None):
        if self.diverged:
            return
        e = self._resolve_errors(x_sub, d_sub, e_sub)
        with np.errstate(over="ignore", invalid="ignore"):
            g = g_error(e, self.p, 1.0)
            den = np.array([p_norm_p(row, self.p) for row in x_sub]) + self.eps
            w_new = self.w + x_sub.T @ (self.mu * g / den)
        if np.all(np.isfinite(w_new)):
            self.w = w_new
        else:
            self.diverged = True


class FonspnEngine(_EngineBase):
    """Fractional-order p-norm subband update.

    Descent direction uses sign(e)|e|**(p-order) against the real part
    of (-x)**order; at order=1 the step reproduces the p-norm engine
    exactly (same operations, opposite signs cancelling).
    """

    def __init__(self, filter_len, cfg):
        super().__init__()
        self.mu = cfg.mu
        self.p = cfg.p_order
        self.order = cfg.frac_order
        self.eps = cfg.reg_eps
        self.w = np.zeros(int(filter_len))

    @property
    def coefficients(self):
        return self.w

    def step(self, x_sub, d_sub=None, e_sub=None):
        if self.diverged:
            return
        e = self._resolve_errors(x_sub, d_sub, e_sub)
        with np.errstate(over="ignore", invalid="ignore"):
            g = g_error(e, self.p, self.order)
            den = np.array([p_norm_p(row, self.p) for row in x_sub]) + self.eps
            fx = frac_power_real(x_sub, self.order)
            w_new = self.w + fx.T @ (-self.mu * g / den)
        if np.all(np.isfinite(w_new)):
            self.w = w_new
        else:
            self.diverged = True


def _init_factors(cfg):
    long = np.zeros((cfg.rank, cfg.seg_len))
    short = np.zeros((cfg.rank, cfg.n_seg))
    if cfg.init_method == "impulse":
        long[:, 0] = cfg.init_scale
        short[:, 0] = cfg.init_scale
    else:
        long[:] = cfg.init_scale
        short[:] = cfg.init_scale
    return long, short


class _NkpBase(_EngineBase):
    """Kronecker-factored engines: both factor stacks update per step.

    Filtered inputs for both factor updates are formed from the factor
    values at the start of the step; errors are shared between the two
    factor updates. The synthesized weight vector is cached after every
    accepted step.
    """

    def __init__(self, filter_len, cfg):
        super().__init__()
        if int(filter_len) != cfg.seg_len * cfg.n_seg:
            raise DimensionError(
                f"filter_len {filter_len} != seg_len*n_seg = {cfg.seg_len * cfg.n_seg}"
            )
        self.mu = cfg.mu
        self.p = cfg.p_order
        self.eps = cfg.reg_eps
        self.seg_len = cfg.seg_len
        self.n_seg = cfg.n_seg
        self.rank = cfg.rank
        self.long, self.short = _init_factors(cfg)
        self._synth = kron_synthesize(KronFactors(long=self.long, short=self.short))

    @property
    def coefficients(self):
        return self._synth

    def _direction(self, v):
        raise NotImplementedError

    def step(self, x_sub, d_sub=None, e_sub=None):
        if self.diverged:
            return
        n_sub = x_sub.shape[0]
        long_flat = self.long.ravel()
        short_flat = self.short.ravel()
        acc_long = np.zeros_like(long_flat)
        acc_short = np.zeros_like(short_flat)
        errors = np.empty(n_sub)
        with np.errstate(over="ignore", invalid="ignore"):
            for j in range(n_sub):
                x = np.asarray(x_sub[j], dtype=np.float64)
                x_for_long = filtered_input_left(x, self.short, self.seg_len, self.n_seg)
                x_for_short = filtered_input_right(x, self.long, self.seg_len, self.n_seg)
                if e_sub is not None:
                    e = float(e_sub[j])
                else:
                    e = float(d_sub[j]) - float(np.dot(long_flat, x_for_long))
                errors[j] = e
                g = g_error(e, self.p, self._order())
                acc_long += (
                    -self.mu * g / (p_norm_p(x_for_long, self.p) + self.eps)
                ) * self._direction(x_for_long)
                acc_short += (
                    -self.mu * g / (p_norm_p(x_for_short, self.p) + self.eps)
                ) * self._direction(x_for_short)
            long_new = long_flat + acc_long
            short_new = short_flat + acc_short
        if np.all(np.isfinite(long_new)) and np.all(np.isfinite(short_new)):
            self.long = long_new.reshape(self.rank, self.seg_len)
            self.short = short_new.reshape(self.rank, self.n_seg)
            self._synth = kron_synthesize(KronFactors(long=self.long, short=self.short))
        else:
            self.diverged = True
        return errors

    def subband_errors(self, x_sub, d_sub):
        # Factored route: identical to the synthesized route up to rounding.
        long_flat = self.long.ravel()
        e = np.empty(x_sub.shape[0])
        for j in range(x_sub.shape[0]):
            x2 = filtered_input_left(x_sub[j], self.short, self.seg_len, self.n_seg)
            e[j] = float(d_sub[j]) - float(np.dot(long_flat, x2))
        return e


class NkpFonspnEngine(_NkpBase):
    """Factored fractional-order p-norm engine."""

    def __init__(self, filter_len, cfg):
        super().__init__(filter_len, cfg)
        self.order = cfg.frac_order

    def _order(self):
        return self.order

    def _direction(self, v):
        return frac_power_real(v, self.order)


class NkpNspnEngine(_NkpBase):
    """Factored p-norm engine, coded directly (not as a special case).

    Error factor sign(e)|e|**(p-1); input factor Re{-v} = -v.
    """

    def _order(self):
        return 1.0

    def _direction(self, v):
        return -v


class TnkpEngine(_EngineBase):
    """Threshold-switched wrapper: factored start, fullband finish.

    Runs the wrapped factored engine until the observed learning metric
    first drops to switch_db or below; from the next update instant it
    continues as a fullband fractional-order engine seeded with the
    synthesized factored weights and step mu_b. The switch latches: once
    taken it is never re-evaluated.
    """

    def __init__(self, inner, cfg):
        super().__init__()
        if cfg.mu_b is None:
            raise ParameterError("field 'mu_b' is required for threshold-switched engines")
        if cfg.switch_db is None:
            raise ParameterError("field 'switch_db' is required for threshold-switched engines")
        self.inner = inner
        self.mu_b = cfg.mu_b
        self.p = cfg.p_order
        self.order = cfg.frac_order
        self.eps = cfg.reg_eps
        self.switch_db = cfg.switch_db
        self.switched = False
        self.switch_index = None
        self._steps = 0
        self.w = None

    @property
    def coefficients(self):
        return self.w if self.switched else self.inner.coefficients

    @property
    def diverged(self):
        return self._own_diverged or self.inner.diverged

    @diverged.setter
    def diverged(self, value):
        self._own_diverged = value

    def subband_errors(self, x_sub, d_sub):
        if self.switched:
            return np.asarray(d_sub, dtype=np.float64) - x_sub @ self.w
        return self.inner.subband_errors(x_sub, d_sub)

    def step(self, x_sub, d_sub=None, e_sub=None):
        if self.diverged:
            return
        self._steps += 1
        if not self.switched:
            self.inner.step(x_sub, d_sub=d_sub, e_sub=e_sub)
            return
        e = self._resolve_errors(x_sub, d_sub, e_sub)
        with np.errstate(over="ignore", invalid="ignore"):
            g = g_error(e, self.p, self.order)
            den = np.array([p_norm_p(row, self.p) for row in x_sub]) + self.eps
            fx = frac_power_real(x_sub, self.order)
            w_new = self.w + fx.T @ (-self.mu_b * g / den)
        if np.all(np.isfinite(w_new)):
            self.w = w_new
        else:
            self._own_diverged = True

    def observe_metric(self, value_db):
        if self.switched or self.diverged:
            return
        if value_db <= self.switch_db:
            self.switched = True
            self.switch_index = self._steps
            self.w = self.inner.coefficients.copy()


def calibrate_switch_db(curve_db, window=5000):
    """Switch threshold: mean of the last `window` curve values (dB).

    The effective window is capped at half the curve length so short
    desk-scale runs still average over steady state only.
    """
    curve_db = np.asarray(curve_db, dtype=np.float64)
    if curve_db.ndim != 1 or curve_db.size == 0:
        raise DimensionError("calibration needs a non-empty 1-D curve")
    window = int(window)
    if window < 1:
        raise ParameterError("calibration window must be >= 1")
    window = max(1, min(window, curve_db.size // 2))
    return float(np.mean(curve_db[-window:]))


def _make_nsaf(filter_len, cfg):
    return NsafEngine(filter_len, cfg)


def _make_tnkp(filter_len, cfg):
    return TnkpEngine(NkpFonspnEngine(filter_len, cfg), cfg)


ENGINE_NAMES = {
    "nsaf": _make_nsaf,
    "nlms": _make_nsaf,  # runner wires a one-column impulse bank + interval 1
    "nspn": NspnEngine,
    "fonspn": FonspnEngine,
    "nkp-nspn": NkpNspnEngine,
    "nkp-fonspn": NkpFonspnEngine,
    "tnkp-fonspn": _make_tnkp,
}


def make_engine(name, filter_len, cfg):
    """Instantiate an identification-side engine by its string name."""
    try:
        factory = ENGINE_NAMES[name]
    except KeyError:
        raise ParameterError(
            f"unknown engine '{name}'; choose from {sorted(ENGINE_NAMES)}"
        ) from None
    return factory(int(filter_len), cfg)

"""Noise sources: symmetric alpha-stable draws, AR(1) coloring, recordings.

The stable sampler follows the Chambers-Mallows-Stuck construction for the
symmetric case. Parameterization is by the characteristic function
exp(-gamma*|t|**alpha); the CMS output (unit scale) is multiplied by
gamma**(1/alpha). alpha=2 is Gaussian with variance 2*gamma, alpha=1 is
Cauchy.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import IngestionError, ParameterError
from .signals import load_signal

__all__ = [
    "AlphaStableParams",
    "ArOneParams",
    "sample_alpha_stable",
    "alpha_stable_draws",
    "sample_ar1",
    "cauchy_driver",
    "load_recording",
]


@dataclass(frozen=True)
class AlphaStableParams:
    """Symmetric alpha-stable law: exp(-gamma*|t|**alpha), 0 < alpha <= 2."""

    alpha: float
    gamma: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ParameterError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.gamma > 0.0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class ArOneParams:
    """First-order autoregression u[k] = pole*u[k-1] + w[k], |pole| < 1."""

    pole: float
    variance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not abs(self.pole) < 1.0:
            raise ParameterError(f"AR(1) pole must satisfy |pole| < 1, got {self.pole}")
        if not self.variance > 0.0:
            raise ParameterError(f"driver variance must be positive, got {self.variance}")


def alpha_stable_draws(alpha, gamma, n, rng):
    """n symmetric alpha-stable draws using an existing Generator.

    One CMS formula covers the whole range: at alpha=1 the secondary
    factor has exponent 0 and the draw reduces to scaled tan(U).
    """
    if not 0.0 < alpha <= 2.0:
        raise ParameterError(f"alpha must lie in (0, 2], got {alpha}")
    if not gamma > 0.0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    n = int(n)
    if n < 0:
        raise ParameterError("sample count must be >= 0")
    u = rng.uniform(-np.pi / 2.0, np.pi / 2.0, n)
    w = rng.exponential(1.0, n)
    exponent = (1.0 - alpha) / alpha
    std = (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)) * (
        np.cos((1.0 - alpha) * u) / w
    ) ** exponent
    return gamma ** (1.0 / alpha) * std


def sample_alpha_stable(params, n, rng=None):
    """Seeded draw: fresh PCG64 generator from params.seed unless given."""
    if rng is None:
        rng = np.random.default_rng(params.seed)
    return alpha_stable_draws(params.alpha, params.gamma, n, rng)


def cauchy_driver(gamma):
    """Driver callable for sample_ar1: Cauchy innovations of scale gamma."""

    def draw(n, rng):
        return alpha_stable_draws(1.0, gamma, n, rng)

    return draw


def sample_ar1(params, n, driver=None, rng=None):
    """AR(1) sequence from zero initial state.

    driver(n, rng) supplies the innovations; default is white Gaussian
    with params.variance. pole=0 returns the driver output unchanged.
    """
    n = int(n)
    if n < 0:
        raise ParameterError("sample count must be >= 0")
    if rng is None:
        rng = np.random.default_rng(params.seed)
    if driver is None:
        w = np.sqrt(params.variance) * rng.standard_normal(n)
    else:
        w = np.asarray(driver(n, rng), dtype=np.float64)
        if w.shape != (n,):
            raise ParameterError("driver returned wrong sample count")
    if params.pole == 0.0:
        return w
    return lfilter([1.0], [1.0, -params.pole], w)


def load_recording(path, normalize=True):
    """Load a recorded excitation; peak-normalize to 1 unless disabled."""
    arr = load_signal(path)
    if normalize:
        peak = np.max(np.abs(arr))
        if peak == 0.0:
            raise IngestionError(f"recording '{path}' is identically zero; cannot normalize")
        arr = arr / peak
    return arr

"""Cosine-modulated analysis bank (pseudo-QMF style).

The prototype is a Kaiser-window lowpass around pi/(2*n_subbands). Its
exact cutoff is tuned numerically at design time so that the summed
magnitude-squared response of the modulated bank is as flat as
possible; the published descriptions pin only the structure, not the
coefficients. Columns are normalized to unit Euclidean norm.
"""

from functools import lru_cache

import numpy as np
from scipy.signal import firwin

from .errors import DesignError, DimensionError
from .signals import as_taps

__all__ = [
    "design_prototype",
    "design_bank",
    "analyze_inputs",
    "analyze_scalar_window",
    "subband_signals",
    "save_bank",
    "load_bank",
    "bank_power_response",
]

# Design a little above the 60 dB floor so the realized sidelobes still
# clear it after the cutoff is retuned for flat summed power.
_ATTEN_DB = 62.0
_NFFT = 4096


def _kaiser_beta(atten_db):
    # Kaiser's attenuation formula for the window shape parameter.
    if atten_db > 50.0:
        return 0.1102 * (atten_db - 8.7)
    if atten_db >= 21.0:
        return 0.5842 * (atten_db - 21.0) ** 0.4 + 0.07886 * (atten_db - 21.0)
    return 0.0


def _modulate(prototype, n_subbands):
    taps = prototype.size
    n = np.arange(taps) - (taps - 1) / 2.0
    cols = []
    for j in range(n_subbands):
        phase = (2 * j + 1) * (np.pi / (2.0 * n_subbands)) * n + (-1) ** j * np.pi / 4.0
        cols.append(2.0 * prototype * np.cos(phase))
    return np.stack(cols, axis=1)


def bank_power_response(bank, nfft=_NFFT):
    """Summed |H_j(w)|^2 over the bank on a dense frequency grid.

    Returns (freqs, power) where freqs are in cycles/sample on [0, 0.5].
    """
    spec = np.fft.rfft(bank, n=nfft, axis=0)
    freqs = np.arange(spec.shape[0]) / nfft
    return freqs, np.sum(np.abs(spec) ** 2, axis=1)


def _ripple_db(bank):
    _, power = bank_power_response(bank)
    if np.min(power) <= 0.0:
        return np.inf
    level = 10.0 * np.log10(power)
    return float(np.max(level) - np.min(level))


def _build(n_subbands, taps, cutoff, kaiser_beta):
    proto = firwin(taps, cutoff, window=("kaiser", kaiser_beta))
    bank = _modulate(proto, n_subbands)
    return bank / np.linalg.norm(bank, axis=0, keepdims=True)


def _check_design(n_subbands, taps):
    n_subbands = int(n_subbands)
    taps = int(taps)
    if n_subbands < 1:
        raise DesignError("n_subbands must be >= 1")
    if taps < 2 * n_subbands or taps < 2:
        raise DesignError(
            f"need taps >= 2*n_subbands for a workable prototype, got taps={taps}"
        )
    return n_subbands, taps


@lru_cache(maxsize=32)
def design_prototype(n_subbands, taps, atten_db=_ATTEN_DB):
    """Tuned Kaiser lowpass prototype for an n_subbands bank.

    The cutoff starts at 1/(2*n_subbands) (Nyquist units) and is tuned
    on a deterministic grid for the flattest summed power response of
    the modulated bank. Returns (prototype, cutoff); the cutoff is in
    cycles/sample relative to half the sample rate as used by firwin.
    """
    n_subbands, taps = _check_design(n_subbands, taps)
    beta = _kaiser_beta(atten_db)
    nominal = 1.0 / (2.0 * n_subbands)
    if n_subbands == 1:
        proto = firwin(taps, nominal, window=("kaiser", beta))
        proto.setflags(write=False)
        return proto, nominal
    grid = nominal * np.linspace(0.85, 1.45, 41)
    ripples = [_ripple_db(_build(n_subbands, taps, c, beta)) for c in grid]
    best = int(np.argmin(ripples))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    fine = np.linspace(lo, hi, 33)
    ripples = [_ripple_db(_build(n_subbands, taps, c, beta)) for c in fine]
    cutoff = float(fine[int(np.argmin(ripples))])
    proto = firwin(taps, cutoff, window=("kaiser", beta))
    proto.setflags(write=False)
    return proto, cutoff


@lru_cache(maxsize=32)
def design_bank(n_subbands, taps, atten_db=_ATTEN_DB):
    """Design the analysis matrix, shape (taps, n_subbands).

    n_subbands=1 returns the bare lowpass prototype (no modulation).
    Requires taps >= 2*n_subbands. The result is deterministic in its
    arguments; columns have unit norm.
    """
    n_subbands, taps = _check_design(n_subbands, taps)
    proto, _ = design_prototype(n_subbands, taps, atten_db)
    if n_subbands == 1:
        col = proto / np.linalg.norm(proto)
        return col[:, None]
    bank = _modulate(np.asarray(proto), n_subbands)
    bank /= np.linalg.norm(bank, axis=0, keepdims=True)
    bank.setflags(write=False)
    return bank


def _check_bank(bank):
    bank = np.asarray(bank, dtype=np.float64)
    if bank.ndim != 2 or bank.size == 0:
        raise DimensionError("analysis bank must be a 2-D matrix (taps x subbands)")
    return bank


def analyze_inputs(window_matrix, bank):
    """Subband input vectors from a sliding input matrix.

    window_matrix has shape (rows, taps) with column j the delay state j
    samples ago; returns shape (n_subbands, rows), row j the subband-j
    input vector (newest entry first).
    """
    bank = _check_bank(bank)
    window_matrix = np.asarray(window_matrix, dtype=np.float64)
    if window_matrix.ndim != 2 or window_matrix.shape[1] != bank.shape[0]:
        raise DimensionError(
            f"window matrix columns ({window_matrix.shape}) must equal bank taps ({bank.shape[0]})"
        )
    return (window_matrix @ bank).T


def analyze_scalar_window(window, bank):
    """Subband samples of one scalar stream from its newest-first window."""
    bank = _check_bank(bank)
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1 or window.size != bank.shape[0]:
        raise DimensionError("scalar window length must equal bank taps")
    return window @ bank


def subband_signals(x, bank):
    """All subband streams of a full signal by direct convolution.

    Returns shape (n_subbands, len(x)); entry (j, k) equals the scalar
    analysis of the window ending at sample k with zero pre-history.
    """
    bank = _check_bank(bank)
    x = as_taps(x)
    out = np.empty((bank.shape[1], x.size))
    for j in range(bank.shape[1]):
        out[j] = np.convolve(x, bank[:, j])[: x.size]
    return out


def save_bank(path, bank):
    np.savetxt(str(path), _check_bank(bank), fmt="%.17g")


def load_bank(path):
    bank = np.loadtxt(str(path), dtype=np.float64, ndmin=2)
    return _check_bank(bank)

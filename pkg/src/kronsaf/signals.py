"""Signal primitives: impulse responses, delay lines, sliding input matrices.

Everything here is direct-form and float64. Delay lines start from zero
pre-history, so a freshly created line behaves as if an infinite run of
zeros preceded the first push.
"""

import warnings

import numpy as np

from .errors import DimensionError, IngestionError, ParameterError

__all__ = [
    "ImpulseResponse",
    "TapDelayLine",
    "as_taps",
    "fir_filter",
    "snapshot_matrix",
    "load_signal",
    "save_signal",
    "load_ir",
    "save_ir",
]


def as_taps(taps):
    """Validate and return a 1-D float64 tap vector.

    Rejects empty input and non-finite entries.
    """
    arr = np.asarray(taps, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError("tap vector must be 1-D and non-empty")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("tap vector contains non-finite entries")
    return arr


class ImpulseResponse:
    """Finite impulse response: a validated tap vector.

    Parameters
    ----------
    taps : array_like
        FIR coefficients, index 0 first. Must be finite and non-empty.
    """

    __slots__ = ("taps",)

    def __init__(self, taps):
        self.taps = as_taps(taps)

    @property
    def length(self):
        return self.taps.size

    def __len__(self):
        return self.taps.size

    def __repr__(self):
        return f"ImpulseResponse(length={self.taps.size})"


def _tap_array(ir):
    if isinstance(ir, ImpulseResponse):
        return ir.taps
    return as_taps(ir)


class TapDelayLine:
    """Most-recent-first shift register with zero pre-history.

    ``read()[i]`` is the sample pushed i steps ago; entries never pushed
    read as zero. Backed by a ring buffer, so ``push`` is O(1).
    """

    __slots__ = ("_buf", "_head")

    def __init__(self, capacity):
        capacity = int(capacity)
        if capacity < 1:
            raise ParameterError("delay line capacity must be >= 1")
        self._buf = np.zeros(capacity)
        self._head = 0

    @property
    def capacity(self):
        return self._buf.size

    def push(self, value):
        value = float(value)
        if not np.isfinite(value):
            raise ParameterError("cannot push non-finite sample")
        self._head = (self._head - 1) % self._buf.size
        self._buf[self._head] = value

    def read(self):
        """Return the state newest-first as a fresh array."""
        return np.roll(self._buf, -self._head).copy() if self._head else self._buf.copy()

    def clear(self):
        self._buf[:] = 0.0
        self._head = 0


def fir_filter(ir, line):
    """One direct-form FIR output sample: dot(taps, current line state).

    ``line`` may be a TapDelayLine or a newest-first array at least as
    long as the tap vector.
    """
    taps = _tap_array(ir)
    state = line.read() if isinstance(line, TapDelayLine) else np.asarray(line, dtype=np.float64)
    if state.ndim != 1 or state.size < taps.size:
        raise DimensionError(
            f"delay state holds {state.size} samples, filter needs {taps.size}"
        )
    return float(np.dot(taps, state[: taps.size]))


def snapshot_matrix(line, rows, cols):
    """Sliding input matrix: column j is the delay-line state j pushes ago.

    Entry (i, j) is the sample pushed i+j steps ago, so the result is a
    rows-by-cols Hankel-structured matrix. Requires capacity (or state
    length) >= rows + cols - 1.
    """
    rows = int(rows)
    cols = int(cols)
    if rows < 1 or cols < 1:
        raise ParameterError("snapshot dimensions must be >= 1")
    state = line.read() if isinstance(line, TapDelayLine) else np.asarray(line, dtype=np.float64)
    need = rows + cols - 1
    if state.size < need:
        raise DimensionError(
            f"need {need} samples of history for a {rows}x{cols} snapshot, have {state.size}"
        )
    windows = np.lib.stride_tricks.sliding_window_view(state[:need], rows)
    return windows[:cols].T.copy()


def save_signal(path, values):
    """Write a 1-D signal; format chosen by extension (.txt or .f64)."""
    path = str(path)
    arr = np.asarray(values, dtype=np.float64).ravel()
    if path.endswith(".txt"):
        np.savetxt(path, arr, fmt="%.17g")
    elif path.endswith(".f64"):
        arr.astype("<f8").tofile(path)
    else:
        raise IngestionError(f"unsupported signal extension on '{path}' (use .txt or .f64)")


def load_signal(path):
    """Read a 1-D signal written by ``save_signal`` (or compatible)."""
    path = str(path)
    try:
        if path.endswith(".txt"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")  # empty file warns; we raise below
                arr = np.loadtxt(path, dtype=np.float64, ndmin=1)
        elif path.endswith(".f64"):
            arr = np.fromfile(path, dtype="<f8")
        else:
            raise IngestionError(f"unsupported signal extension on '{path}' (use .txt or .f64)")
    except (OSError, ValueError) as exc:
        raise IngestionError(f"cannot read signal file '{path}': {exc}") from exc
    arr = np.asarray(arr, dtype=np.float64).ravel()
    if arr.size == 0:
        raise IngestionError(f"signal file '{path}' is empty")
    if not np.all(np.isfinite(arr)):
        raise IngestionError(f"signal file '{path}' contains non-finite values")
    return arr


def load_ir(path):
    """Load an impulse response from a .txt or .f64 file."""
    return ImpulseResponse(load_signal(path))


def save_ir(path, ir):
    save_signal(path, _tap_array(ir))

"""Learning-curve metrics: weight misalignment and noise-reduction ratios.

Conventions used throughout:
- ratios are clamped below at 1e-15 before any dB conversion, so the
  curve floor is -300 dB and curves never contain NaN or -inf;
- averaging across trials happens on linear ratios, the log comes last;
- NMSD curves are recorded once per update instant, ANR curves once per
  sample.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "RATIO_FLOOR",
    "nmsd_ratio",
    "nmsd_db",
    "ratio_to_db",
    "AnrTracker",
    "MultiAnrTracker",
    "LearningCurve",
    "aggregate_trials",
    "write_curve_csv",
    "read_curve_csv",
]

RATIO_FLOOR = 1e-15
_ETA = 0.999


def ratio_to_db(ratio):
    """20*log10 with the documented clamp floor."""
    ratio = np.maximum(np.asarray(ratio, dtype=np.float64), RATIO_FLOOR)
    out = 20.0 * np.log10(ratio)
    return out if out.ndim else float(out)


def nmsd_ratio(reference, estimate):
    """Linear misalignment ||reference - estimate|| / ||reference||."""
    reference = np.asarray(reference, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if reference.shape != estimate.shape:
        raise DimensionError("weight vectors must have equal shape")
    denom = np.linalg.norm(reference)
    if denom == 0.0:
        raise ParameterError("reference weight vector must be nonzero")
    with np.errstate(over="ignore", invalid="ignore"):
        num = np.linalg.norm(reference - estimate)
    if not np.isfinite(num):
        return np.inf
    return float(num / denom)


def nmsd_db(reference, estimate):
    return ratio_to_db(nmsd_ratio(reference, estimate))


class AnrTracker:
    """Smoothed residual-to-disturbance ratio.

    Both absolute-value streams are smoothed with the same one-pole
    recursion (forgetting factor 0.999, zero initial state). While the
    disturbance average is still below the clamp floor the previous
    output is returned (0 dB before anything was observed).
    """

    __slots__ = ("eta", "_ze", "_zd", "_prev_ratio")

    def __init__(self, eta=_ETA):
        if not 0.0 < eta < 1.0:
            raise ParameterError("forgetting factor must lie in (0, 1)")
        self.eta = eta
        self._ze = 0.0
        self._zd = 0.0
        self._prev_ratio = 1.0

    def update(self, residual, disturbance):
        """Advance one sample; returns the current linear ratio."""
        self._ze = self.eta * self._ze + (1.0 - self.eta) * abs(float(residual))
        self._zd = self.eta * self._zd + (1.0 - self.eta) * abs(float(disturbance))
        if self._zd >= RATIO_FLOOR:
            self._prev_ratio = self._ze / self._zd
        return self._prev_ratio

    def update_db(self, residual, disturbance):
        return ratio_to_db(self.update(residual, disturbance))

    @property
    def ratio(self):
        return self._prev_ratio

    @property
    def db(self):
        return ratio_to_db(self._prev_ratio)


class MultiAnrTracker:
    """Channel-averaged ratio: per-channel smoothers, mean of the ratios.

    The mean sits inside the log, so the dB output is the dB of the
    average linear ratio across channels.
    """

    __slots__ = ("eta", "_ze", "_zd", "_prev_ratio", "channels")

    def __init__(self, channels, eta=_ETA):
        channels = int(channels)
        if channels < 1:
            raise ParameterError("need at least one channel")
        if not 0.0 < eta < 1.0:
            raise ParameterError("forgetting factor must lie in (0, 1)")
        self.channels = channels
        self.eta = eta
        self._ze = np.zeros(channels)
        self._zd = np.zeros(channels)
        self._prev_ratio = 1.0

    def update(self, residuals, disturbances):
        residuals = np.asarray(residuals, dtype=np.float64)
        disturbances = np.asarray(disturbances, dtype=np.float64)
        if residuals.shape != (self.channels,) or disturbances.shape != (self.channels,):
            raise DimensionError("need one residual and one disturbance per channel")
        self._ze = self.eta * self._ze + (1.0 - self.eta) * np.abs(residuals)
        self._zd = self.eta * self._zd + (1.0 - self.eta) * np.abs(disturbances)
        if np.all(self._zd >= RATIO_FLOOR):
            self._prev_ratio = float(np.mean(self._ze / self._zd))
        return self._prev_ratio

    @property
    def ratio(self):
        return self._prev_ratio

    @property
    def db(self):
        return ratio_to_db(self._prev_ratio)


@dataclass
class LearningCurve:
    """dB learning curve plus how it was recorded and aggregated."""

    values_db: np.ndarray
    record_stride: int = 1
    trial_count: int = 1
    divergent_trials: int | None = None

    def __post_init__(self):
        self.values_db = np.asarray(self.values_db, dtype=np.float64)
        if self.values_db.ndim != 1:
            raise DimensionError("curve values must be 1-D")
        if not np.all(np.isfinite(self.values_db)):
            raise ParameterError("curve values must be finite (clamp before recording)")


def aggregate_trials(ratio_curves, divergent_flags, record_stride=1):
    """Pointwise mean of linear ratio curves, then dB.

    ratio_curves is (trials, points); divergent trials are included as
    given (their curves are expected to be frozen at the last finite
    value) and only counted in the metadata.
    """
    ratio_curves = np.asarray(ratio_curves, dtype=np.float64)
    if ratio_curves.ndim != 2 or ratio_curves.size == 0:
        raise DimensionError("need a (trials, points) ratio array")
    divergent_flags = list(divergent_flags)
    if len(divergent_flags) != ratio_curves.shape[0]:
        raise DimensionError("one divergence flag per trial required")
    mean_ratio = np.mean(ratio_curves, axis=0)
    return LearningCurve(
        values_db=ratio_to_db(mean_ratio),
        record_stride=int(record_stride),
        trial_count=ratio_curves.shape[0],
        divergent_trials=int(sum(bool(f) for f in divergent_flags)),
    )


def write_curve_csv(path, curve):
    """Write `index, value_db[, divergent_trials]` rows, 9 significant digits.

    `index` is the sample index of each recorded instant (row number
    times the record stride), so the file plots without the manifest.
    The divergence column appears whenever the curve carries the count
    (aggregated experiment outputs always do) and repeats it per row.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    with_div = curve.divergent_trials is not None
    writer.writerow(["index", "value_db", "divergent_trials"] if with_div else ["index", "value_db"])
    for i, v in enumerate(curve.values_db):
        row = [str(i * curve.record_stride), f"{v:.9g}"]
        if with_div:
            row.append(str(curve.divergent_trials))
        writer.writerow(row)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def read_curve_csv(path):
    """Inverse of write_curve_csv; the stride is inferred from the indices."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["index", "value_db"]:
        raise ParameterError(f"'{path}' is not a curve CSV")
    values = np.array([float(r[1]) for r in rows[1:]])
    stride = int(rows[2][0]) - int(rows[1][0]) if len(rows) > 2 else 1
    divergent = None
    if len(rows[0]) > 2 and rows[0][2] == "divergent_trials" and len(rows) > 1:
        divergent = int(rows[1][2])
    return LearningCurve(values_db=values, record_stride=max(stride, 1),
                         divergent_trials=divergent)

"""Windowed file-API consistency metrics.

Each metric compares the top-K file-API rate vector of a current execution
window against the preceding window; low values mean the composition is
repeating, which is the ransomware signature stage 1 keys on. A trace score
slides the frame one second at a time, smooths the per-window series with a
rolling mean and aggregates (default: minimum, so one sufficiently
consistent stretch determines the verdict).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import (InsufficientDurationError, NoFileActivityError,
                     ValidationError)
from .trace import Trace
from .windows import (DEFAULT_CATALOGUE, BinSeries, FileApiCatalogue,
                      WindowVector, bin_events, top_k_file_apis)

METRICS = ("cosine", "manhattan", "weighted", "euclidean")

_METRIC_IDS = {
    "cosine": _kernels.METRIC_COSINE,
    "manhattan": _kernels.METRIC_MANHATTAN,
    "weighted": _kernels.METRIC_WEIGHTED,
    "euclidean": _kernels.METRIC_EUCLIDEAN,
}


@dataclass(frozen=True)
class ConsistencyParams:
    metric: str = "manhattan"
    prev_len: float = 3.0
    curr_len: float = 1.0
    k: int = 10
    smooth_w: int = 5
    aggregate: str = "min"
    bin_width: float = 1.0

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"unknown metric {self.metric!r}")
        if self.prev_len <= 0 or self.curr_len <= 0:
            raise ValidationError("window lengths must be positive")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.smooth_w < 1:
            raise ValidationError("smooth_w must be >= 1")
        if self.aggregate not in ("min", "mean"):
            raise ValidationError(f"unknown aggregate {self.aggregate!r}")
        if self.bin_width <= 0:
            raise ValidationError("bin_width must be positive")


@dataclass
class TraceScore:
    """Per-trace consistency result.

    ``per_window`` holds (frame start second, raw score) for every scored
    frame; ``smoothed`` the rolling-mean series aligned to the start of each
    smoothing window; ``aggregate`` the declared aggregation of ``smoothed``.
    """

    metric: str
    per_window: list
    smoothed: list
    aggregate: float

    def best_span(self, params: "ConsistencyParams") -> tuple[float, float]:
        """Time span covered by the most consistent smoothed window."""
        i = min(range(len(self.smoothed)), key=lambda j: self.smoothed[j][1])
        start = self.smoothed[i][0]
        frame = params.prev_len + params.curr_len
        # a smoothed value at index i covers raw frames i .. i+smooth_w-1
        raw_starts = [s for s, _ in self.per_window]
        j = raw_starts.index(start)
        last = min(j + params.smooth_w - 1, len(raw_starts) - 1)
        return start, raw_starts[last] + frame


def _check_basis(c: WindowVector, p: WindowVector, f=None):
    if c.apis != p.apis:
        raise ValidationError("window vectors use different API bases")
    if f is not None and len(f) != len(c.apis):
        raise ValidationError("weight vector length mismatch")


def cosine_consistency(c: WindowVector, p: WindowVector) -> Optional[float]:
    """1 minus cosine similarity; in [0, 1] for non-negative rate vectors.

    Undefined when either vector is all-zero: returns None, which trace
    scoring treats as a skipped window pair.
    """
    _check_basis(c, p)
    nc = float(np.linalg.norm(c.values))
    npv = float(np.linalg.norm(p.values))
    if nc == 0.0 or npv == 0.0:
        return None
    sim = float(np.dot(c.values, p.values)) / (nc * npv)
    return max(1.0 - sim, 0.0)


def manhattan_consistency(c: WindowVector, p: WindowVector) -> float:
    _check_basis(c, p)
    return float(np.abs(c.values - p.values).sum())


def weighted_consistency(c: WindowVector, p: WindowVector, f) -> float:
    """Manhattan distance with per-API weights (the whole-trace frequency
    shares of the top APIs, so the most frequent API dominates the score)."""
    f = np.asarray(f, dtype=np.float64)
    _check_basis(c, p, f)
    if f.shape[0] and float(f.min()) < 0:
        raise ValidationError("weights must be non-negative")
    return float((f * np.abs(c.values - p.values)).sum())


def euclidean_consistency(c: WindowVector, p: WindowVector) -> float:
    _check_basis(c, p)
    return float(np.sqrt(((c.values - p.values) ** 2).sum()))


def frequency_weights(series: BinSeries, apis) -> np.ndarray:
    """Whole-trace call shares of the basis APIs (sums to 1 when any occur)."""
    totals = series.totals()
    w = np.array([float(totals[series.api_index[a]]) if a in series.api_index
                  else 0.0 for a in apis])
    s = w.sum()
    return w / s if s > 0 else w


def score_series(series: BinSeries, basis, params: ConsistencyParams) -> TraceScore:
    """Slide the (prev_len + curr_len) frame over the binned series.

    Stride is one bin. Window pairs where both rate vectors are all-zero are
    skipped (idle seconds say nothing about consistency); the cosine metric
    additionally skips pairs where either side is all-zero, where it is
    undefined.
    """
    if not basis:
        raise NoFileActivityError("no file activity")
    w = series.bin_width
    n_prev = max(1, int(round(params.prev_len / w)))
    n_curr = max(1, int(round(params.curr_len / w)))
    frame = n_prev + n_curr
    if series.total_bins < frame:
        raise InsufficientDurationError(
            f"insufficient duration: trace spans {series.total_bins} bins, "
            f"frame needs {frame}")
    cols = np.array([series.api_index[a] for a in basis], dtype=np.int64)
    counts = np.ascontiguousarray(series.counts[:, cols])
    weights = frequency_weights(series, basis) if params.metric == "weighted" \
        else np.empty(0, np.float64)
    scores, valid = _kernels.sliding_scores(
        counts, n_prev, n_curr, float(params.prev_len), float(params.curr_len),
        _METRIC_IDS[params.metric], weights)
    idx = np.nonzero(valid)[0]
    if idx.shape[0] == 0:
        raise NoFileActivityError("no file activity")
    starts = idx.astype(np.float64) * w
    raw = scores[idx]
    per_window = list(zip(starts.tolist(), raw.tolist()))

    if raw.shape[0] < params.smooth_w:
        smoothed_vals = np.array([raw.mean()])
        smoothed = [(float(starts[0]), float(smoothed_vals[0]))]
    else:
        kernel = np.ones(params.smooth_w) / params.smooth_w
        smoothed_vals = np.convolve(raw, kernel, mode="valid")
        smoothed = list(zip(starts[:smoothed_vals.shape[0]].tolist(),
                            smoothed_vals.tolist()))
    agg = float(smoothed_vals.min() if params.aggregate == "min"
                else smoothed_vals.mean())
    return TraceScore(params.metric, per_window, smoothed, agg)


def trace_consistency(trace: Trace,
                      params: ConsistencyParams = ConsistencyParams(),
                      catalogue: FileApiCatalogue = DEFAULT_CATALOGUE) -> TraceScore:
    """Score one trace: bin, pick the top-K file APIs over the whole trace
    (a stable basis across windows), then run the sliding frame."""
    if len(trace) == 0:
        raise InsufficientDurationError("insufficient duration: empty trace")
    series = bin_events(trace, params.bin_width)
    basis = top_k_file_apis(series, catalogue, params.k)
    return score_series(series, basis, params)

"""Evenness of per-bin top-API compositions.

A perfectly even bin (every top API called equally often) scores 0; the
more one API dominates, the larger the value. Computed per bin and averaged
over the bins that saw any top-API activity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoFileActivityError, ValidationError
from .trace import Trace
from .windows import DEFAULT_CATALOGUE, FileApiCatalogue, bin_events, top_k_file_apis

KINDS = ("normalized", "squared")


@dataclass
class EvennessResult:
    kind: str
    per_bin: list          # (bin index, value) for every included bin
    average: float


def bin_evenness(bin_counts, kind: str) -> Optional[float]:
    """Evenness of one count vector.

    normalized: sum(|count_i - avg|) / avg; scale-invariant.
    squared: sum((count_i - avg)^2); scales with the square of the counts.

    Returns None for the normalized kind when the average is zero (the
    value is undefined there; callers treat it as a skipped bin).
    """
    if kind not in KINDS:
        raise ValidationError(f"unknown evenness kind {kind!r}")
    v = np.asarray(bin_counts, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ValidationError("bin_counts must be a non-empty vector")
    if v.min() < 0:
        raise ValidationError("counts must be non-negative")
    avg = v.mean()
    if kind == "normalized":
        if avg == 0.0:
            return None
        return float(np.abs(v - avg).sum() / avg)
    return float(((v - avg) ** 2).sum())


def trace_evenness(trace: Trace, kind: str = "normalized",
                   catalogue: FileApiCatalogue = DEFAULT_CATALOGUE,
                   k: int = 10, bin_width: float = 1.0) -> EvennessResult:
    """Per-bin evenness over the trace's top-k file APIs, averaged.

    Bins with zero total top-API count are excluded from the average (the
    normalized kind is undefined there, and including zero rows would let
    idle time masquerade as perfectly even execution).
    """
    if kind not in KINDS:
        raise ValidationError(f"unknown evenness kind {kind!r}")
    series = bin_events(trace, bin_width)
    basis = top_k_file_apis(series, catalogue, k)
    if not basis:
        raise NoFileActivityError("no file activity")
    cols = [series.api_index[a] for a in basis]
    counts = series.counts[:, cols]
    active = np.nonzero(counts.sum(axis=1) > 0)[0]
    if active.shape[0] == 0:
        raise NoFileActivityError("no file activity")
    per_bin = []
    for b in active:
        val = bin_evenness(counts[b], kind)
        per_bin.append((int(b), val))
    avg = float(np.mean([v for _, v in per_bin]))
    return EvennessResult(kind, per_bin, avg)

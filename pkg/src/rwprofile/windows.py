"""Per-second binning and top-K file-API window vectors.

Execution traces are reduced to a dense per-bin count matrix (default bin
width one second). Window vectors hold per-second average call *rates* over
a fixed API basis, so windows of unequal length stay comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import ValidationError
from .trace import Trace

# File-related APIs monitored by the windowed metrics. Configurable; this
# default covers create/open/read/write/delete/query/set-pointer style calls
# plus directory traversal and attribute manipulation.
DEFAULT_FILE_APIS = frozenset({
    "NtCreateFile", "NtOpenFile", "NtReadFile", "NtWriteFile", "NtDeleteFile",
    "NtQueryDirectoryFile", "NtQueryInformationFile", "NtSetInformationFile",
    "NtQueryAttributesFile", "NtDeviceIoControlFile",
    "SetFilePointer", "SetFilePointerEx",
    "GetFileType", "GetFileSize", "GetFileSizeEx",
    "GetFileInformationByHandle", "GetFileInformationByHandleEx",
    "FindFirstFileExW", "FindNextFileW",
    "SetFileAttributesW", "MoveFileWithProgressW", "CopyFileExW",
    "DeleteFileW", "CreateDirectoryW", "RemoveDirectoryA", "RemoveDirectoryW",
    "SetEndOfFile", "SetFileTime",
})

_MAX_BIN_CELLS = 200_000_000  # dense grid guard


@dataclass(frozen=True)
class FileApiCatalogue:
    """Set of API names treated as file-related."""

    names: frozenset = field(default_factory=lambda: DEFAULT_FILE_APIS)

    def __post_init__(self):
        object.__setattr__(self, "names", frozenset(self.names))
        if not self.names:
            raise ValidationError("file-API catalogue is empty")

    def __contains__(self, api: str) -> bool:
        return api in self.names

    @classmethod
    def load(cls, path) -> "FileApiCatalogue":
        """Load from a plain-text file, one API name per line, '#' comments."""
        names = set()
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if line:
                    names.add(line)
        return cls(frozenset(names))


DEFAULT_CATALOGUE = FileApiCatalogue()


class BinSeries:
    """Per-bin per-API call counts for one trace.

    ``counts`` is a dense [total_bins, n_apis] float64 matrix whose columns
    follow ``apis``. ``bins`` exposes the sparse mapping view
    {bin index: {api: count}} for small-scale inspection.
    """

    __slots__ = ("bin_width", "counts", "apis", "api_index", "total_bins")

    def __init__(self, bin_width: float, counts: np.ndarray, apis: list[str]):
        self.bin_width = float(bin_width)
        self.counts = counts
        self.apis = apis
        self.api_index = {a: i for i, a in enumerate(apis)}
        self.total_bins = counts.shape[0]

    @property
    def bins(self) -> dict[int, dict[str, int]]:
        out: dict[int, dict[str, int]] = {}
        rows = np.nonzero(self.counts.sum(axis=1))[0]
        for b in rows:
            row = self.counts[b]
            out[int(b)] = {self.apis[k]: int(row[k])
                           for k in np.nonzero(row)[0]}
        return out

    def totals(self) -> np.ndarray:
        """Whole-series per-API totals (column sums)."""
        return self.counts.sum(axis=0)


def bin_events(trace: Trace, bin_width: float = 1.0) -> BinSeries:
    """Bin events into per-``bin_width``-second per-API counts.

    An event at ts lands in bin floor(ts / bin_width); a timestamp exactly
    on a boundary therefore belongs to the higher bin. Empty bins are
    represented (count 0) up to ceil(span / bin_width) where span is the
    declared duration when present, else the last event timestamp.
    """
    if bin_width <= 0:
        raise ValidationError("bin_width must be positive")
    ts = trace.timestamps
    names = trace.api_names
    if ts.shape[0] == 0:
        return BinSeries(bin_width, np.zeros((0, len(names))), list(names))
    span = trace.declared_duration if trace.declared_duration is not None \
        else float(ts[-1])
    bin_idx = np.floor_divide(ts, bin_width).astype(np.int64)
    # ceil(span/width), bumped when the last event sits exactly on the
    # closing boundary (the floor rule sends it to the next bin up)
    total_bins = max(int(math.ceil(span / bin_width)), int(bin_idx[-1]) + 1)
    if total_bins * max(len(names), 1) > _MAX_BIN_CELLS:
        raise ValidationError("bin grid too large: reduce span or raise bin_width")
    counts = _kernels.bin_counts(bin_idx, trace.api_codes.astype(np.int64),
                                 total_bins, len(names))
    return BinSeries(bin_width, counts, list(names))


def top_k_file_apis(series: BinSeries, catalogue: FileApiCatalogue = DEFAULT_CATALOGUE,
                    k: int = 10) -> list[str]:
    """The k catalogue APIs with the highest whole-series totals.

    Descending by count, ties broken lexicographically by name; fewer than
    k are returned when fewer catalogue APIs occur at all.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    totals = series.totals()
    ranked = sorted(
        ((a, float(totals[i])) for i, a in enumerate(series.apis)
         if a in catalogue and totals[i] > 0),
        key=lambda item: (-item[1], item[0]))
    return [a for a, _ in ranked[:k]]


@dataclass(frozen=True)
class WindowVector:
    """Per-second average call rates over a window, on a fixed API basis."""

    apis: tuple
    values: np.ndarray
    window_start: float
    window_len: float

    def __post_init__(self):
        if len(self.apis) != self.values.shape[0]:
            raise ValidationError("basis and values length mismatch")


def window_vector(series: BinSeries, apis: Sequence[str], start: float,
                  length: float) -> WindowVector:
    """Average per-second rates of ``apis`` over [start, start+length).

    Counts come from the bins covering that interval; a window reaching past
    the series end uses the existing bins only but still divides by
    ``length``.
    """
    if length <= 0:
        raise ValidationError("window length must be positive")
    if start < 0:
        raise ValidationError("window start must be >= 0")
    if not apis:
        raise ValidationError("API basis is empty")
    w = series.bin_width
    first = int(math.floor(start / w + 1e-9))
    last = int(math.ceil((start + length) / w - 1e-9))
    first = min(first, series.total_bins)
    last = min(last, series.total_bins)
    cols = [series.api_index.get(a, -1) for a in apis]
    values = np.zeros(len(apis), np.float64)
    if last > first:
        block = series.counts[first:last]
        for i, c in enumerate(cols):
            if c >= 0:
                values[i] = block[:, c].sum() / length
    return WindowVector(tuple(apis), values, float(start), float(length))

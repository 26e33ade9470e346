"""Canonical trace representation and ingestion.

A trace is an ordered sequence of timestamped API invocations for one
execution, with timestamps rebased so the first call happens at t=0.
Events are stored columnar (one float64 timestamp array plus an integer
API-code array) so million-event traces stay cheap to hold and to bin.

Two input formats are supported:

* the native format: UTF-8 line-delimited JSON, one ``{"ts": ..., "api": ...,
  "category"?: ...}`` object per event, optionally preceded by a header line
  ``{"id": ..., "label": ..., "duration": ...}``;
* sandbox-style JSON reports with ``behavior -> processes[] -> calls[]``,
  each call carrying a numeric time field and an ``api`` string.
"""

from __future__ import annotations

import json
import math
import warnings
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

from .errors import ParseError, ValidationError

try:
    import polars as _pl
except ImportError:  # pragma: no cover - polars is a declared dependency
    _pl = None

LABELS = ("ransomware", "benign", "unknown")


class ApiEvent(NamedTuple):
    ts: float
    api: str
    category: Optional[str] = None


class _EventSeq:
    """Read-only sequence view over a trace's columnar event storage."""

    def __init__(self, trace: "Trace"):
        self._t = trace

    def __len__(self) -> int:
        return self._t._ts.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        t = self._t
        cat = None
        if t._cat_codes is not None:
            c = t._cat_codes[i]
            cat = t._cat_names[c] if c >= 0 else None
        return ApiEvent(float(t._ts[i]), t._api_names[t._codes[i]], cat)

    def __iter__(self) -> Iterator[ApiEvent]:
        for i in range(len(self)):
            yield self[i]


class Trace:
    """One execution trace: id, label, optional declared duration, events.

    Events are kept sorted non-decreasing by timestamp (a stable sort is
    applied at construction when needed, so equal timestamps keep their
    input order). Negative timestamps and empty API names are rejected.
    """

    __slots__ = ("id", "label", "declared_duration",
                 "_ts", "_codes", "_api_names", "_cat_codes", "_cat_names")

    def __init__(self, id: str = "trace", label: str = "unknown",
                 declared_duration: Optional[float] = None,
                 events: Iterable[ApiEvent] = ()):
        ts, codes, names, cat_codes, cat_names = _columns_from_events(events)
        self._init_arrays(id, label, declared_duration,
                          ts, codes, names, cat_codes, cat_names)

    @classmethod
    def from_arrays(cls, id: str, label: str, declared_duration,
                    ts: np.ndarray, api_codes: np.ndarray,
                    api_names: list[str],
                    cat_codes: Optional[np.ndarray] = None,
                    cat_names: Optional[list[str]] = None) -> "Trace":
        t = cls.__new__(cls)
        t._init_arrays(id, label, declared_duration,
                       np.asarray(ts, dtype=np.float64),
                       np.asarray(api_codes, dtype=np.int32),
                       list(api_names), cat_codes,
                       list(cat_names) if cat_names is not None else None)
        return t

    def _init_arrays(self, id, label, declared_duration,
                     ts, codes, api_names, cat_codes, cat_names):
        if label not in LABELS:
            raise ValidationError(f"unknown label {label!r}")
        if declared_duration is not None:
            declared_duration = float(declared_duration)
            if not math.isfinite(declared_duration) or declared_duration <= 0:
                raise ValidationError("declared_duration must be positive and finite")
        if ts.shape[0]:
            if not np.isfinite(ts).all():
                raise ValidationError("non-finite event timestamp")
            if float(ts.min()) < 0:
                raise ValidationError("negative event timestamp")
        for name in api_names:
            if not name:
                raise ValidationError("empty API name")
        if ts.shape[0] > 1 and np.any(np.diff(ts) < 0):
            order = np.argsort(ts, kind="stable")
            ts = ts[order]
            codes = codes[order]
            if cat_codes is not None:
                cat_codes = cat_codes[order]
        self.id = id
        self.label = label
        self.declared_duration = declared_duration
        self._ts = ts
        self._codes = codes
        self._api_names = api_names
        self._cat_codes = cat_codes
        self._cat_names = cat_names

    @property
    def events(self) -> _EventSeq:
        return _EventSeq(self)

    @property
    def timestamps(self) -> np.ndarray:
        return self._ts

    @property
    def api_codes(self) -> np.ndarray:
        return self._codes

    @property
    def api_names(self) -> list[str]:
        return self._api_names

    def __len__(self) -> int:
        return self._ts.shape[0]

    @property
    def span(self) -> float:
        """Timestamp of the last event, 0.0 for an empty trace."""
        return float(self._ts[-1]) if self._ts.shape[0] else 0.0

    @property
    def duration(self) -> float:
        """Declared duration when present, else the observed span."""
        return self.declared_duration if self.declared_duration is not None else self.span

    def with_meta(self, id: Optional[str] = None,
                  label: Optional[str] = None) -> "Trace":
        """Copy with a different id and/or label; events are shared."""
        t = Trace.__new__(Trace)
        t._init_arrays(id if id is not None else self.id,
                       label if label is not None else self.label,
                       self.declared_duration, self._ts, self._codes,
                       self._api_names, self._cat_codes, self._cat_names)
        return t

    def api_totals(self) -> dict[str, int]:
        """Total call count per distinct API actually present."""
        if not self._ts.shape[0]:
            return {}
        counts = np.bincount(self._codes, minlength=len(self._api_names))
        return {self._api_names[i]: int(counts[i])
                for i in np.nonzero(counts)[0]}

    def distinct_apis(self) -> set[str]:
        return set(self.api_totals())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        if (self.id, self.label, self.declared_duration) != \
                (other.id, other.label, other.declared_duration):
            return False
        if len(self) != len(other):
            return False
        if not np.array_equal(self._ts, other._ts):
            return False
        a = [self._api_names[c] for c in self._codes]
        b = [other._api_names[c] for c in other._codes]
        return a == b and list(self.events) == list(other.events)

    def __repr__(self) -> str:
        return (f"Trace(id={self.id!r}, label={self.label!r}, "
                f"events={len(self)}, duration={self.duration})")


def _columns_from_events(events):
    ts = []
    codes = []
    names: list[str] = []
    index: dict[str, int] = {}
    cat_codes = []
    cat_names: list[str] = []
    cat_index: dict[str, int] = {}
    any_cat = False
    for ev in events:
        ts.append(float(ev.ts))
        code = index.get(ev.api)
        if code is None:
            code = index[ev.api] = len(names)
            names.append(ev.api)
        codes.append(code)
        cat = ev.category
        if cat is None:
            cat_codes.append(-1)
        else:
            any_cat = True
            cc = cat_index.get(cat)
            if cc is None:
                cc = cat_index[cat] = len(cat_names)
                cat_names.append(cat)
            cat_codes.append(cc)
    ts_arr = np.asarray(ts, dtype=np.float64)
    code_arr = np.asarray(codes, dtype=np.int32)
    if any_cat:
        return ts_arr, code_arr, names, np.asarray(cat_codes, dtype=np.int16), cat_names
    return ts_arr, code_arr, names, None, None


# ---------------------------------------------------------------------------
# native line-delimited format

def parse_trace_native(data: bytes) -> Trace:
    """Parse the native line-delimited JSON format.

    The first line may be a header object (recognised by the absence of an
    ``api`` key); every other line must be an event object. Events are
    re-sorted by timestamp; the label defaults to ``unknown``.
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    body = data.strip()
    if not body:
        return Trace(id="trace", label="unknown")

    nl = body.find(b"\n")
    first_line = body if nl < 0 else body[:nl]
    try:
        first = json.loads(first_line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=1) from None
    if not isinstance(first, dict):
        raise ParseError("expected a JSON object", line=1)

    header = None
    rest = body
    first_event_line = 1
    if "api" not in first:
        header = first
        rest = b"" if nl < 0 else body[nl + 1:].strip()
        first_event_line = 2

    ts, codes, names, cats = _parse_event_lines(rest, first_event_line)
    trace_id = "trace"
    label = "unknown"
    duration = None
    if header is not None:
        trace_id = str(header.get("id", trace_id))
        label = str(header.get("label", label))
        if label not in LABELS:
            raise ParseError(f"unknown label {label!r}", line=1)
        if header.get("duration") is not None:
            duration = header["duration"]
            if not isinstance(duration, (int, float)) or duration <= 0:
                raise ParseError("duration must be a positive number", line=1)
    cat_codes = cat_names = None
    if cats is not None:
        cat_codes, cat_names = cats
    return Trace.from_arrays(trace_id, label, duration, ts, codes, names,
                             cat_codes, cat_names)


def _parse_event_lines(body: bytes, first_line: int):
    """Decode event lines into columns. Fast path hands the whole body to
    polars; any failure falls back to line-by-line stdlib json so errors
    can name the offending line."""
    if not body:
        return (np.empty(0, np.float64), np.empty(0, np.int32), [], None)
    if _pl is not None and b'"category"' not in body:
        try:
            df = _pl.read_ndjson(body, schema={"ts": _pl.Float64,
                                               "api": _pl.Categorical})
            n_lines = body.count(b"\n") + 1  # body is stripped
            if df.height == n_lines and df["ts"].null_count() == 0 \
                    and df["api"].null_count() == 0:
                ts = df["ts"].to_numpy()
                codes = df["api"].to_physical().to_numpy().astype(np.int32,
                                                                  copy=False)
                names = df["api"].cat.get_categories().to_list()
                if not np.isnan(ts).any() and all(names):
                    if ts.shape[0] and float(ts.min()) < 0:
                        bad = int(np.argmin(ts)) + first_line
                        raise ValidationError(f"line {bad}: negative ts")
                    return ts, codes, names, None
        except (_pl.exceptions.PolarsError, TypeError):
            pass  # fall through to the diagnostic parser
    return _parse_event_lines_slow(body, first_line)


def _parse_event_lines_slow(body: bytes, first_line: int):
    ts = []
    codes = []
    names: list[str] = []
    index: dict[str, int] = {}
    cat_codes = []
    cat_names: list[str] = []
    cat_index: dict[str, int] = {}
    any_cat = False
    for offset, raw in enumerate(body.split(b"\n")):
        lineno = first_line + offset
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if not isinstance(obj, dict) or "ts" not in obj or "api" not in obj:
            raise ParseError("event needs \"ts\" and \"api\" fields", line=lineno)
        t = obj["ts"]
        if not isinstance(t, (int, float)):
            raise ParseError("\"ts\" must be a number", line=lineno)
        if t < 0:
            raise ValidationError(f"line {lineno}: negative ts")
        api = obj["api"]
        if not isinstance(api, str) or not api:
            raise ParseError("\"api\" must be a non-empty string", line=lineno)
        ts.append(float(t))
        code = index.get(api)
        if code is None:
            code = index[api] = len(names)
            names.append(api)
        codes.append(code)
        cat = obj.get("category")
        if cat is None:
            cat_codes.append(-1)
        else:
            any_cat = True
            cc = cat_index.get(cat)
            if cc is None:
                cc = cat_index[cat] = len(cat_names)
                cat_names.append(cat)
            cat_codes.append(cc)
    cats = None
    if any_cat:
        cats = (np.asarray(cat_codes, dtype=np.int16), cat_names)
    return (np.asarray(ts, dtype=np.float64),
            np.asarray(codes, dtype=np.int32), names, cats)


def serialize_native(trace: Trace) -> bytes:
    """Serialize to the native format. Deterministic: the same trace always
    produces the same bytes, and parse(serialize(t)) == t for normalized t."""
    header: dict = {"id": trace.id, "label": trace.label}
    if trace.declared_duration is not None:
        header["duration"] = trace.declared_duration
    out = [json.dumps(header, separators=(", ", ": "))]
    ts = trace._ts
    codes = trace._codes
    names = trace._api_names
    cat_codes = trace._cat_codes
    if cat_codes is None:
        for i in range(ts.shape[0]):
            out.append('{"ts": %s, "api": %s}'
                       % (repr(float(ts[i])), json.dumps(names[codes[i]])))
    else:
        cat_names = trace._cat_names
        for i in range(ts.shape[0]):
            c = cat_codes[i]
            if c < 0:
                out.append('{"ts": %s, "api": %s}'
                           % (repr(float(ts[i])), json.dumps(names[codes[i]])))
            else:
                out.append('{"ts": %s, "api": %s, "category": %s}'
                           % (repr(float(ts[i])), json.dumps(names[codes[i]]),
                              json.dumps(cat_names[c])))
    out.append("")
    return "\n".join(out).encode("utf-8")


def load_trace(path) -> Trace:
    with open(path, "rb") as fh:
        return parse_trace_native(fh.read())


def save_trace(trace: Trace, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_native(trace))


# ---------------------------------------------------------------------------
# sandbox report adapter

def parse_sandbox_report(data: bytes) -> Trace:
    """Parse a sandbox-style JSON report into one merged trace.

    Calls from every process are merged; timestamps are rebased so the
    earliest call lands at t=0 (the adapter therefore tolerates absolute
    epoch times as well as relative ones). Calls without a usable numeric
    time or API name are skipped. A report without any call records yields
    an empty trace plus a ``RuntimeWarning``, not an error.
    """
    try:
        report = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(report, dict):
        raise ParseError("report must be a JSON object")

    processes = report.get("behavior", {}).get("processes", [])
    rows = []
    skipped = 0
    if isinstance(processes, list):
        for proc in processes:
            calls = proc.get("calls") if isinstance(proc, dict) else None
            if not isinstance(calls, list):
                continue
            for call in calls:
                if not isinstance(call, dict):
                    skipped += 1
                    continue
                t = call.get("time", call.get("timestamp", call.get("ts")))
                api = call.get("api")
                if not isinstance(t, (int, float)) or not math.isfinite(t) \
                        or not isinstance(api, str) or not api:
                    skipped += 1
                    continue
                cat = call.get("category")
                rows.append((float(t), api, cat if isinstance(cat, str) else None))

    trace_id = _report_id(report)
    duration = None
    info = report.get("info")
    if isinstance(info, dict) and isinstance(info.get("duration"), (int, float)) \
            and info["duration"] > 0:
        duration = float(info["duration"])

    if not rows:
        warnings.warn(f"sandbox report {trace_id!r}: no call records found",
                      RuntimeWarning, stacklevel=2)
        return Trace(id=trace_id, label="unknown", declared_duration=duration)
    if skipped:
        warnings.warn(f"sandbox report {trace_id!r}: skipped {skipped} "
                      "malformed call records", RuntimeWarning, stacklevel=2)

    rows.sort(key=lambda r: r[0])
    base = rows[0][0]
    events = [ApiEvent(t - base, api, cat) for t, api, cat in rows]
    return Trace(id=trace_id, label="unknown", declared_duration=duration,
                 events=events)


def _report_id(report) -> str:
    target = report.get("target")
    if isinstance(target, dict):
        f = target.get("file")
        if isinstance(f, dict):
            for key in ("name", "md5", "sha256"):
                if isinstance(f.get(key), str) and f[key]:
                    return f[key]
    info = report.get("info")
    if isinstance(info, dict) and info.get("id") is not None:
        return str(info["id"])
    return "sandbox-report"


# ---------------------------------------------------------------------------

def normalize(trace: Trace) -> tuple[Trace, int]:
    """Sort events and clamp to the declared duration.

    Events past the declared duration are dropped (reports sometimes span
    more wall-clock time than the recorded execution window). Returns the
    normalized trace and the number of dropped events. Idempotent.
    """
    ts = trace._ts
    dropped = 0
    if trace.declared_duration is not None and ts.shape[0]:
        keep = ts <= trace.declared_duration
        dropped = int(ts.shape[0] - keep.sum())
        if dropped:
            cat_codes = trace._cat_codes
            trace = Trace.from_arrays(
                trace.id, trace.label, trace.declared_duration,
                ts[keep], trace._codes[keep], trace._api_names,
                cat_codes[keep] if cat_codes is not None else None,
                trace._cat_names)
    return trace, dropped

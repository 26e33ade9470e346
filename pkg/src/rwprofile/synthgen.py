"""Deterministic synthetic trace generator.

Produces traces with the behavioral shapes the detector targets, so the
whole pipeline can be exercised end to end without malware samples:

* ``ransomware``: 6-10 file APIs with a near-even, stable composition and a
  high steady call rate for the whole run;
* ``benign_random``: bursty activity whose API subset, mix and rate are
  redrawn every few seconds;
* ``copy`` / ``move``: exactly 3 file APIs, repetitive batches separated by
  near-idle gaps;
* ``extract``: one API takes at least 90% of all file calls;
* ``compress`` / ``encrypt_tool`` / ``delete``: two phases with distinct
  API sets (directory preparation, then the bulk operation);
* ``git_like``: one highly consistent multi-API period embedded in varied
  activity, plus a benign-heavy non-file API profile, reproducing the
  stage-1 false positive that stage 2 must clear.

Randomness comes from SplitMix64 used as a counter-based stream, so every
draw is a pure function of (seed, purpose tag, index) and any reimplementation
can match it:

    mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
              z *= 0x94D049BB133111EB; z ^= z >> 31   (uint64 wrapping)
    value_i(seed)   = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)
    substream(seed, tag) = mix64(seed ^ mix64(tag))
    uniform_i = value_i >> 11, scaled by 2^-53 into [0, 1)

Normal deviates use the Box-Muller transform on uniform pairs (2i, 2i+1);
per-second totals use the rounded normal approximation of a Poisson draw,
max(0, rint(lam + sqrt(lam) * z)). Per-API counts apportion each second's
total by largest remainder (ties to the lower API index).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .contrast import builtin_model
from .errors import ValidationError
from .trace import Trace, save_trace

KINDS = ("ransomware", "benign_random", "copy", "move", "extract",
         "compress", "encrypt_tool", "delete", "git_like")

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# substream purpose tags
_TAG_TOTALS = 1
_TAG_SHARES = 2
_TAG_REGIME = 3
_TAG_INJECT = 4
_TAG_PROFILE = 5

_MODEL = builtin_model()
_R_LIST = sorted(_MODEL.set_r)
_B_LIST = sorted(_MODEL.set_b)

_RW_FILE_SEQUENCE = [
    "NtCreateFile", "NtReadFile", "NtWriteFile", "NtQueryInformationFile",
    "SetFilePointerEx", "NtOpenFile", "GetFileType", "NtSetInformationFile",
    "NtQueryDirectoryFile", "CreateDirectoryW",
]
_BENIGN_FILE_POOL = [
    "NtOpenFile", "NtReadFile", "NtWriteFile", "NtCreateFile",
    "NtQueryDirectoryFile", "NtQueryInformationFile", "GetFileType",
    "SetFilePointerEx", "FindFirstFileExW", "FindNextFileW",
    "NtQueryAttributesFile", "GetFileInformationByHandle",
]
_GIT_CORE_POOL = [
    "NtOpenFile", "NtReadFile", "NtWriteFile", "NtQueryInformationFile",
    "GetFileType", "SetFilePointerEx",
]

_DEFAULT_RATES = {
    "ransomware": 2000.0,
    "benign_random": 1200.0,
    "copy": 800.0,
    "move": 700.0,
    "extract": 1500.0,
    "compress": 900.0,
    "encrypt_tool": 1000.0,
    "delete": 400.0,
    "git_like": 1500.0,
}


@dataclass(frozen=True)
class GenSpec:
    kind: str
    duration: float = 120.0
    rate: Optional[float] = None      # mean calls/second; None = kind default
    n_apis: int = 7
    seed: int = 0
    api_profile: tuple = ()           # extra non-file APIs to inject
    trace_id: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown generator kind {self.kind!r}")
        if self.duration <= 0:
            raise ValidationError("duration must be positive")
        if self.rate is not None and self.rate <= 0:
            raise ValidationError("rate must be positive")
        if self.n_apis < 1:
            raise ValidationError("n_apis must be >= 1")
        object.__setattr__(self, "api_profile", tuple(self.api_profile))

    @property
    def resolved_rate(self) -> float:
        return self.rate if self.rate is not None else _DEFAULT_RATES[self.kind]

    @property
    def resolved_id(self) -> str:
        return self.trace_id if self.trace_id else f"{self.kind}-{self.seed:05d}"

    @property
    def label(self) -> str:
        return "ransomware" if self.kind == "ransomware" else "benign"


# ---------------------------------------------------------------------------
# SplitMix64 counter-based stream

def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


def _mix64(z: int) -> int:
    z &= 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * _M1) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * _M2) & 0xFFFFFFFFFFFFFFFF
    return z ^ (z >> 31)


def _substream(seed: int, tag: int) -> int:
    return _mix64((seed & 0xFFFFFFFFFFFFFFFF) ^ _mix64(tag))


def _u01_vec(seed: int, start: int, n: int) -> np.ndarray:
    idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    raw = _mix64_np(np.uint64(seed) + idx * np.uint64(_GOLDEN))
    return (raw >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def _u01(seed: int, i: int) -> float:
    raw = _mix64((seed + (i + 1) * _GOLDEN) & 0xFFFFFFFFFFFFFFFF)
    return (raw >> 11) * (2.0 ** -53)


def _normals(seed: int, start_pair: int, n: int) -> np.ndarray:
    u = _u01_vec(seed, 2 * start_pair, 2 * n)
    u1 = u[0::2]
    u2 = u[1::2]
    return np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * math.pi * u2)


def _poisson_like(lam: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Rounded normal approximation of Poisson(lam), clamped at 0."""
    vals = np.rint(lam + np.sqrt(np.maximum(lam, 0.0)) * z)
    return np.maximum(vals, 0.0).astype(np.int64)


def _shuffle_pick(seed: int, pool: Sequence[str], count: int) -> list[str]:
    """First ``count`` entries of a Fisher-Yates shuffle of the pool."""
    arr = list(pool)
    draw = 0
    for i in range(len(arr) - 1, 0, -1):
        j = int(_u01(seed, draw) * (i + 1))
        draw += 1
        arr[i], arr[j] = arr[j], arr[i]
    return arr[:count]


def _apportion(totals: np.ndarray, shares: np.ndarray) -> np.ndarray:
    """Split integer totals across APIs by largest remainder.

    ``shares`` is either one probability vector or one per second; ties in
    the remainders go to the lower API index.
    """
    T = totals.shape[0]
    if shares.ndim == 1:
        shares = np.broadcast_to(shares, (T, shares.shape[0]))
    ideal = totals[:, None] * shares
    base = np.floor(ideal)
    rem = (totals - base.sum(axis=1)).astype(np.int64)
    frac = ideal - base
    order = np.argsort(-frac, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order,
                      np.broadcast_to(np.arange(shares.shape[1]), order.shape),
                      axis=1)
    base += ranks < rem[:, None]
    return base.astype(np.int64)


# ---------------------------------------------------------------------------
# counts construction

def _counts_to_events(counts: np.ndarray, duration: float):
    """Materialize (ts, api column) event arrays from a per-second count
    matrix. Events within a second are ordered API-major and spread over
    the second at (j + 0.5) / n offsets."""
    T, K = counts.shape
    totals = counts.sum(axis=1)
    n = int(totals.sum())
    if n == 0:
        return np.empty(0, np.float64), np.empty(0, np.int32)
    flat = counts.reshape(-1)
    api = np.repeat(np.tile(np.arange(K, dtype=np.int32), T), flat)
    sec = np.repeat(np.arange(T, dtype=np.float64), totals)
    starts = np.concatenate([[0], np.cumsum(totals)[:-1]])
    within = np.arange(n, dtype=np.float64) - np.repeat(starts, totals)
    per_sec = np.repeat(totals.astype(np.float64), totals)
    ts = sec + (within + 0.5) / per_sec
    np.minimum(ts, duration, out=ts)
    return ts, api


def _regime_schedule(seed: int, T: int, len_lo: int, len_hi: int):
    """Deterministic list of (t0, t1) regime boundaries covering [0, T)."""
    spans = []
    t = 0
    draw = 0
    while t < T:
        u = _u01(seed, draw)
        draw += 1
        length = len_lo + int(u * (len_hi - len_lo + 1))
        spans.append((t, min(t + length, T)))
        t += length
    return spans


class _Build:
    """Accumulates per-second counts over a growing API union."""

    def __init__(self, T: int, z: np.ndarray):
        self.T = T
        self.z = z                     # one normal deviate per second
        self.apis: list[str] = []
        self.index: dict[str, int] = {}
        self.counts = np.zeros((T, 0), np.int64)

    def cols(self, names):
        out = []
        for name in names:
            if name not in self.index:
                self.index[name] = len(self.apis)
                self.apis.append(name)
            out.append(self.index[name])
        if self.counts.shape[1] < len(self.apis):
            grown = np.zeros((self.T, len(self.apis)), np.int64)
            grown[:, :self.counts.shape[1]] = self.counts
            self.counts = grown
        return np.array(out, dtype=np.int64)

    def add(self, t0, t1, names, shares, lam):
        if t1 <= t0:
            return
        cols = self.cols(names)
        totals = _poisson_like(lam, self.z[t0:t1])
        self.counts[t0:t1, cols] = _apportion(totals, shares)

    def add_exact(self, t0, t1, names, shares, totals):
        if t1 <= t0:
            return
        cols = self.cols(names)
        self.counts[t0:t1, cols] = _apportion(totals, shares)


def _uneven_shares(seed: int, base_idx: int, k: int) -> np.ndarray:
    w = np.array([0.05 + _u01(seed, base_idx + i) ** 2 for i in range(k)])
    return w / w.sum()


def _even_shares(seed: int, base_idx: int, k: int, spread: float = 0.4) -> np.ndarray:
    w = np.array([1.0 - spread / 2 + spread * _u01(seed, base_idx + i)
                  for i in range(k)])
    return w / w.sum()


# ---------------------------------------------------------------------------
# kind builders (each fills a _Build with per-second counts)

def _build_ransomware(spec, build, s_sh, s_rg):
    n = min(max(spec.n_apis, 6), 10)
    basis = _RW_FILE_SEQUENCE[:n]
    shares = _even_shares(s_sh, 0, n)
    lam = np.full(build.T, spec.resolved_rate)
    build.add(0, build.T, basis, shares, lam)


def _build_benign_random(spec, build, s_sh, s_rg):
    rate = spec.resolved_rate
    draw = 1000
    for i, (t0, t1) in enumerate(_regime_schedule(s_rg, build.T, 2, 6)):
        size = 2 + int(_u01(s_rg, draw) * 5)
        mult = math.exp(math.log(0.3)
                        + _u01(s_rg, draw + 1) * (math.log(3.6) - math.log(0.3)))
        draw += 2
        subset = _shuffle_pick(_substream(s_rg, 100 + i), _BENIGN_FILE_POOL, size)
        shares = _uneven_shares(s_sh, 16 * i, size)
        jit = 0.5 + 1.0 * _u01_vec(s_sh, 100000 + 8 * t0, t1 - t0)
        build.add(t0, t1, subset, shares, rate * mult * jit)


def _gappy_segment(build, s_sh, s_rg, t0, t1, rate, basis, shares, draw_tag,
                   reshare_spread=None):
    """Fill [t0, t1) with work batches separated by near-idle gap seconds.

    Batches run 3-7 seconds, gaps 1-3; a rolling nine-second stretch always
    crosses at least one batch boundary, so the rate never looks steady at
    the smoothing scale stage 1 uses. With ``reshare_spread`` the API mix is
    redrawn per batch (different directories hit different call blends).
    """
    t = t0
    draw = draw_tag
    batch = 0
    while t < t1:
        work = 3 + int(_u01(s_rg, draw) * 5)
        gap = 1 + int(_u01(s_rg, draw + 1) * 3)
        mult = 0.7 + 0.6 * _u01(s_rg, draw + 2)
        gmult = 0.03 + 0.07 * _u01(s_rg, draw + 3)
        draw += 4
        if reshare_spread is not None:
            shares = _even_shares(s_sh, draw_tag + 64 + 16 * batch,
                                  len(basis), spread=reshare_spread)
        batch += 1
        w1 = min(t + work, t1)
        jit = 0.45 + 1.1 * _u01_vec(s_sh, 100000 + 8 * t, w1 - t)
        build.add(t, w1, basis, shares, rate * mult * jit)
        g1 = min(w1 + gap, t1)
        if g1 > w1:
            jit = 0.45 + 1.1 * _u01_vec(s_sh, 200000 + 8 * w1, g1 - w1)
            build.add(w1, g1, basis, shares, rate * gmult * jit)
        t = g1


def _build_batch_gaps(spec, build, s_sh, s_rg, basis):
    """copy/move shape: one API trio processed in gappy batches."""
    shares = _even_shares(s_sh, 0, len(basis), spread=0.3)
    _gappy_segment(build, s_sh, s_rg, 0, build.T, spec.resolved_rate,
                   basis, shares, draw_tag=0)


def _build_extract(spec, build, s_sh, s_rg):
    rate = spec.resolved_rate
    dom = 0.92 + 0.06 * _u01(s_sh, 0)
    minors = _uneven_shares(s_sh, 1, 3) * (1.0 - dom)
    shares = np.concatenate([[dom], minors])
    basis = ["NtWriteFile", "NtCreateFile", "NtQueryInformationFile",
             "NtSetInformationFile"]
    draw = 0
    for t0, t1 in _regime_schedule(s_rg, build.T, 4, 8):
        mult = 0.5 + 1.1 * _u01(s_rg, 5000 + draw)
        draw += 1
        jit = 0.6 + 0.8 * _u01_vec(s_sh, 100000 + 8 * t0, t1 - t0)
        build.add(t0, t1, basis, shares, rate * mult * jit)


_PHASES = {
    "compress": (["NtOpenFile", "NtQueryDirectoryFile"],
                 ["NtReadFile", "NtCreateFile", "GetFileInformationByHandle"]),
    "encrypt_tool": (["NtOpenFile", "NtQueryDirectoryFile"],
                     ["NtReadFile", "NtCreateFile",
                      "GetFileInformationByHandle", "SetFilePointerEx"]),
    "delete": (["NtQueryDirectoryFile", "NtQueryAttributesFile"],
               ["NtSetInformationFile", "DeleteFileW", "NtOpenFile"]),
}


def _build_two_phase(spec, build, s_sh, s_rg):
    rate = spec.resolved_rate
    basis1, basis2 = _PHASES[spec.kind]
    frac = 0.25 + 0.15 * _u01(s_rg, 0)
    if spec.kind == "delete":
        frac = 0.3 + 0.1 * _u01(s_rg, 0)
    split = max(1, min(build.T - 1, int(round(build.T * frac))))
    m1 = 0.5 + 0.3 * _u01(s_rg, 1)
    m2 = 0.9 + 0.3 * _u01(s_rg, 2)
    sh1 = _even_shares(s_sh, 0, len(basis1), spread=0.5)
    sh2 = _even_shares(s_sh, 8, len(basis2), spread=0.5)
    _gappy_segment(build, s_sh, s_rg, 0, split, rate * m1, basis1, sh1,
                   draw_tag=10000, reshare_spread=0.9)
    _gappy_segment(build, s_sh, s_rg, split, build.T, rate * m2, basis2, sh2,
                   draw_tag=20000, reshare_spread=0.9)


def _build_git_like(spec, build, s_sh, s_rg):
    T = build.T
    rate = spec.resolved_rate
    a = int(round(T * (0.25 + 0.1 * _u01(s_rg, 0))))
    core_len = max(20, int(round(T * (0.35 + 0.1 * _u01(s_rg, 1)))))
    b = min(a + core_len, max(a + 1, T - 5))

    # varied pre/post segments, benign_random style; regime spans straddling
    # the core are clipped so nothing contaminates the consistent period
    draw = 1000
    for i, (t0, t1) in enumerate(_regime_schedule(_substream(s_rg, 7), T, 2, 6)):
        size = 2 + int(_u01(s_rg, draw) * 4)
        mult = math.exp(math.log(0.05)
                        + _u01(s_rg, draw + 1) * (math.log(2.5) - math.log(0.05)))
        draw += 2
        subset = _shuffle_pick(_substream(s_rg, 300 + i), _BENIGN_FILE_POOL, size)
        shares = _uneven_shares(s_sh, 16 * i + 512, size)
        for lo, hi in ((t0, min(t1, a)), (max(t0, b), t1)):
            if hi <= lo:
                continue
            jit = 0.55 + 0.9 * _u01_vec(s_sh, 100000 + 8 * lo, hi - lo)
            build.add(lo, hi, subset, shares, rate * mult * jit)

    # the consistent core: stable basis, near-even mix, sub-Poisson jitter
    k = 5 + int(_u01(s_sh, 90) * 2)
    basis = _GIT_CORE_POOL[:k]
    shares = _even_shares(s_sh, 64, k, spread=0.3)
    u = _u01_vec(s_sh, 300000, b - a)
    totals = np.rint(rate * (0.995 + 0.01 * u)).astype(np.int64)
    build.add_exact(a, b, basis, shares, totals)


_BUILDERS = {
    "ransomware": _build_ransomware,
    "benign_random": _build_benign_random,
    "copy": lambda s, bld, ssh, srg: _build_batch_gaps(
        s, bld, ssh, srg, ["NtOpenFile", "NtReadFile", "NtWriteFile"]),
    "move": lambda s, bld, ssh, srg: _build_batch_gaps(
        s, bld, ssh, srg,
        ["NtOpenFile", "NtSetInformationFile", "NtQueryAttributesFile"]),
    "extract": _build_extract,
    "compress": _build_two_phase,
    "encrypt_tool": _build_two_phase,
    "delete": _build_two_phase,
    "git_like": _build_git_like,
}

# non-file API injections per kind: (B-set lo/hi, R-set lo/hi)
_INJECTION_PLAN = {
    "ransomware": ((0, 4), (2, 6)),
    "benign_random": ((7, 14), (0, 2)),
    "copy": ((7, 14), (0, 1)),
    "move": ((7, 14), (0, 1)),
    "extract": ((7, 14), (0, 0)),
    "compress": ((7, 14), (0, 1)),
    "encrypt_tool": ((7, 14), (0, 1)),
    "delete": ((7, 14), (0, 1)),
    "git_like": ((13, 18), (0, 2)),
}


def _injections(spec: GenSpec) -> list[tuple[str, np.ndarray]]:
    """Low-rate non-file API events: a benign-set subset, a ransomware-set
    subset sized by kind, plus the caller's explicit api_profile."""
    s_inj = _substream(spec.seed, _TAG_INJECT)
    (b_lo, b_hi), (r_lo, r_hi) = _INJECTION_PLAN[spec.kind]
    n_b = b_lo + int(_u01(s_inj, 0) * (b_hi - b_lo + 1))
    n_r = r_lo + int(_u01(s_inj, 1) * (r_hi - r_lo + 1))
    picks = _shuffle_pick(_substream(s_inj, 2), _B_LIST, n_b) \
        + _shuffle_pick(_substream(s_inj, 3), _R_LIST, n_r)
    out = []
    for j, api in enumerate(picks):
        sub = _substream(s_inj, 100 + j)
        m = 3 + int(_u01(sub, 0) * 10)
        times = np.sort(_u01_vec(sub, 1, m)) * spec.duration
        out.append((api, times))
    s_prof = _substream(spec.seed, _TAG_PROFILE)
    for j, api in enumerate(spec.api_profile):
        sub = _substream(s_prof, j)
        times = np.sort(_u01_vec(sub, 0, 6)) * spec.duration
        out.append((api, times))
    return out


def generate(spec: GenSpec) -> Trace:
    """Generate one trace. Equal (spec, seed) yields byte-identical output."""
    T = max(1, int(round(spec.duration)))
    s_tot = _substream(spec.seed, _TAG_TOTALS)
    s_sh = _substream(spec.seed, _TAG_SHARES)
    s_rg = _substream(spec.seed, _TAG_REGIME)
    build = _Build(T, _normals(s_tot, 0, T))
    _BUILDERS[spec.kind](spec, build, s_sh, s_rg)

    ts, api_cols = _counts_to_events(build.counts, spec.duration)
    names = list(build.apis)
    name_index = dict(build.index)

    def code_for(api: str) -> int:
        if api not in name_index:
            name_index[api] = len(names)
            names.append(api)
        return name_index[api]

    # steady low-rate background unrelated to files or the scored sets
    extra_ts = []
    extra_codes = []
    for bg_api, phase in (("NtClose", 0.37), ("NtOpenKey", 0.81)):
        t = np.minimum(np.arange(T, dtype=np.float64) + phase, spec.duration)
        extra_ts.append(t)
        extra_codes.append(np.full(T, code_for(bg_api), np.int32))

    for api, times in _injections(spec):
        extra_ts.append(times)
        extra_codes.append(np.full(times.shape[0], code_for(api), np.int32))

    all_ts = np.concatenate([ts] + extra_ts)
    all_codes = np.concatenate([api_cols] + extra_codes)
    order = np.argsort(all_ts, kind="stable")
    return Trace.from_arrays(spec.resolved_id, spec.label, spec.duration,
                             all_ts[order], all_codes[order], names)


# ---------------------------------------------------------------------------
# corpus generation

def generate_corpus(manifest: Sequence[GenSpec],
                    out_dir: Optional[Path] = None) -> list[Trace]:
    """Generate every spec; labels follow the kind (ransomware kind is
    labeled ransomware, everything else benign).

    With ``out_dir`` the traces are written in the native format next to a
    ``corpus.json`` manifest listing path, label, kind and seed per trace.
    """
    if not manifest:
        raise ValidationError("empty generation manifest")
    ids = [spec.resolved_id for spec in manifest]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValidationError(f"duplicate trace ids: {', '.join(dupes)}")
    traces = [generate(spec) for spec in manifest]
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = []
        for spec, trace in zip(manifest, traces):
            name = f"{trace.id}.jsonl"
            save_trace(trace, out_dir / name)
            rows.append({"path": name, "label": trace.label,
                         "kind": spec.kind, "seed": spec.seed, "id": trace.id})
        with open(out_dir / "corpus.json", "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)
            fh.write("\n")
    return traces


_BENIGN_CYCLE = ("benign_random", "copy", "move", "extract", "compress",
                 "encrypt_tool", "delete")


def default_corpus_specs(n_ransomware: int = 50, n_benign: int = 50,
                         duration: float = 120.0) -> list[GenSpec]:
    """The standard mixed corpus: ransomware seeds 1..n, then benign kinds
    cycling through the benign shapes with one git_like per ten benign
    traces (seeds n+5, n+15, ...)."""
    specs = []
    for seed in range(1, n_ransomware + 1):
        specs.append(GenSpec("ransomware", duration=duration,
                             n_apis=6 + seed % 5, seed=seed))
    cycle_i = 0
    for j in range(n_benign):
        seed = n_ransomware + 1 + j
        if j % 10 == 4:
            kind = "git_like"
        else:
            kind = _BENIGN_CYCLE[cycle_i % len(_BENIGN_CYCLE)]
            cycle_i += 1
        specs.append(GenSpec(kind, duration=duration, seed=seed))
    return specs


def specs_from_json(text) -> list[GenSpec]:
    """Parse a generation manifest: a JSON array of spec objects."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid manifest JSON: {exc.msg}") from None
    if not isinstance(doc, list):
        raise ValidationError("generation manifest must be a JSON array")
    specs = []
    for i, obj in enumerate(doc):
        if not isinstance(obj, dict) or "kind" not in obj:
            raise ValidationError(f"manifest entry {i}: needs a \"kind\"")
        try:
            specs.append(GenSpec(
                kind=obj["kind"],
                duration=float(obj.get("duration", 120.0)),
                rate=float(obj["rate"]) if obj.get("rate") is not None else None,
                n_apis=int(obj.get("n_apis", 7)),
                seed=int(obj.get("seed", 0)),
                api_profile=tuple(obj.get("api_profile", ())),
                trace_id=obj.get("id")))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"manifest entry {i}: {exc}") from None
    return specs

"""Single-API distribution baselines: divergences, rank-sum and Poisson
rate scores over per-second call-count histograms.

These are comparison baselines only; per-API distributions of ransomware
and benign runs overlap too much to carry a verdict on their own.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ValidationError
from .trace import Trace
from .windows import bin_events

#: per-second call-count buckets; observed rates span single calls to a few
#: thousand per second, hence the geometric steps
DEFAULT_BUCKET_EDGES = (0, 10, 100, 1000, 10000)


@dataclass(frozen=True)
class Bucketing:
    """Finite, exhaustive count buckets: {0}, (0,e1], (e1,e2], ..., (e_n, inf)."""

    edges: tuple = DEFAULT_BUCKET_EDGES

    def __post_init__(self):
        e = tuple(self.edges)
        if len(e) < 1 or e[0] != 0 or any(a >= b for a, b in zip(e, e[1:])):
            raise ValidationError("bucket edges must start at 0 and increase")
        object.__setattr__(self, "edges", e)

    @property
    def labels(self) -> tuple:
        out = ["0"]
        prev = 0
        for e in self.edges[1:]:
            out.append(f"{prev + 1}-{e}")
            prev = e
        out.append(f">{prev}")
        return tuple(out)

    def index_of(self, count: float) -> int:
        return int(np.searchsorted(np.asarray(self.edges), count, side="left"))

    def counts_to_probs(self, per_second_counts: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.edges), per_second_counts,
                              side="left")
        hist = np.bincount(idx, minlength=len(self.edges) + 1).astype(np.float64)
        return hist / hist.sum()


@dataclass(frozen=True)
class FrequencyDistribution:
    support: tuple          # bucket labels
    probs: np.ndarray
    api: str

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "support", tuple(self.support))
        if p.shape[0] != len(self.support):
            raise ValidationError("support and probs length mismatch")
        if p.shape[0] and p.min() < 0:
            raise ValidationError("probabilities must be non-negative")
        if abs(float(p.sum()) - 1.0) > 1e-9:
            raise ValidationError("probabilities must sum to 1")


def _per_second_counts(trace: Trace, api: str, bin_width: float) -> np.ndarray:
    series = bin_events(trace, bin_width)
    col = series.api_index.get(api)
    if col is None:
        return np.empty(0, np.float64)
    counts = series.counts[:, col]
    return counts[counts > 0]  # active seconds only


def api_frequency_distribution(trace_or_corpus: Union[Trace, Iterable[Trace]],
                               api: str,
                               bucketing: Bucketing = Bucketing(),
                               bin_width: float = 1.0) -> FrequencyDistribution:
    """Histogram of per-second call counts of one API over active seconds.

    A corpus (iterable of traces) pools the per-second counts of every
    member. An API that never occurs yields a degenerate point mass on the
    zero bucket, with a warning.
    """
    if isinstance(trace_or_corpus, Trace):
        traces = [trace_or_corpus]
    else:
        traces = list(trace_or_corpus)
    pooled = [c for t in traces for c in _per_second_counts(t, api, bin_width)]
    labels = bucketing.labels
    if not pooled:
        warnings.warn(f"API {api!r} never called; degenerate distribution",
                      RuntimeWarning, stacklevel=2)
        probs = np.zeros(len(labels))
        probs[0] = 1.0
        return FrequencyDistribution(labels, probs, api)
    probs = bucketing.counts_to_probs(np.asarray(pooled, dtype=np.float64))
    return FrequencyDistribution(labels, probs, api)


def _check_support(p: FrequencyDistribution, q: FrequencyDistribution):
    if p.support != q.support:
        raise ValidationError("distributions use different supports")


def _smoothed(p: np.ndarray, q: np.ndarray, epsilon: float):
    """Additive smoothing, applied symmetrically and only when a zero cell
    would otherwise send a divergence to infinity."""
    if epsilon > 0 and (p.min() <= 0.0 or q.min() <= 0.0):
        n = p.shape[0]
        p = (p + epsilon) / (1.0 + n * epsilon)
        q = (q + epsilon) / (1.0 + n * epsilon)
    return p, q


def kl_divergence(p: FrequencyDistribution, q: FrequencyDistribution,
                  epsilon: float = 1e-9) -> float:
    """Natural-log KL divergence sum(p * log(p/q)) on a shared support."""
    _check_support(p, q)
    pv, qv = _smoothed(p.probs, q.probs, epsilon)
    mask = pv > 0
    return float(np.sum(pv[mask] * np.log(pv[mask] / qv[mask])))


def js_divergence(p: FrequencyDistribution, q: FrequencyDistribution,
                  variant: str = "as-printed") -> float:
    """Jensen-Shannon style divergence against the mixture M = (P+Q)/2.

    ``as-printed`` composes KL(P||M)/2 + KL(M||P)/2 (the form this package
    standardises on); ``standard`` is the textbook symmetric form
    KL(P||M)/2 + KL(Q||M)/2, bounded by ln 2. Natural log throughout.
    """
    _check_support(p, q)
    m = FrequencyDistribution(p.support, (p.probs + q.probs) / 2.0, p.api)
    if variant == "as-printed":
        return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(m, p)
    if variant == "standard":
        # M covers the support of both P and Q, so no smoothing is needed:
        # cells with p(x)=0 contribute 0 by the 0*log(0) convention
        return 0.5 * _kl_zero_convention(p.probs, m.probs) \
            + 0.5 * _kl_zero_convention(q.probs, m.probs)
    raise ValidationError(f"unknown js variant {variant!r}")


def _kl_zero_convention(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Rank-sum test with midranks for ties.

    Returns (U statistic of the first sample, two-sided p-value from the
    normal approximation with tie correction). Identical samples sit at the
    null mean, so their p-value is exactly 1.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.size == 0 or bv.size == 0:
        raise ValidationError("both samples must be non-empty")
    n1, n2 = av.size, bv.size
    pooled = np.concatenate([av, bv])
    order = np.argsort(pooled, kind="stable")
    ranks = np.empty(pooled.size, np.float64)
    sorted_vals = pooled[order]
    # midranks: average the 1-based rank over each tied run
    i = 0
    n = pooled.size
    tie_sizes = []
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        if j > i:
            tie_sizes.append(j - i + 1)
        i = j + 1
    r1 = float(ranks[:n1].sum())
    u = r1 - n1 * (n1 + 1) / 2.0
    mean_u = n1 * n2 / 2.0
    tie_term = sum(t ** 3 - t for t in tie_sizes)
    var_u = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if var_u <= 0:
        return u, 1.0
    z = (u - mean_u) / math.sqrt(var_u)
    p_value = math.erfc(abs(z) / math.sqrt(2.0))
    return u, min(p_value, 1.0)


def poisson_rate_score(per_second_counts: Sequence[int],
                       reference_rate: float) -> float:
    """Mean per-observation Poisson log-likelihood under a reference rate.

    Higher means the counts are more compatible with the reference.
    """
    if reference_rate <= 0:
        raise ValidationError("reference_rate must be positive")
    k = np.asarray(per_second_counts)
    if k.size == 0:
        raise ValidationError("counts must be non-empty")
    if np.any(k < 0):
        raise ValidationError("counts must be non-negative")
    kf = k.astype(np.float64)
    log_fact = np.array([math.lgamma(v + 1.0) for v in kf])
    ll = kf * math.log(reference_rate) - reference_rate - log_fact
    return float(ll.mean())

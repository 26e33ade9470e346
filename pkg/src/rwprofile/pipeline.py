"""Two-stage classification: consistency screening, contrast refinement.

Stage 1 flags a trace whose aggregate consistency score falls below a
threshold. Stage 2 computes the API contrast score for stage-1 positives
only and can overturn them to benign (score at or below the refinement
threshold); it never flips a benign decision to ransomware.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .consistency import ConsistencyParams, trace_consistency
from .contrast import ApiContrastModel, api_contrast_score, builtin_model
from .errors import UnscorableTraceError, ValidationError
from .trace import Trace
from .windows import DEFAULT_CATALOGUE, FileApiCatalogue

#: refinement threshold: stage-1 positives at or below this contrast score
#: are overturned to benign
DEFAULT_STAGE2_THRESHOLD = -10

#: stage-1 fallbacks calibrated on the default synthetic corpus
#: (default_corpus_specs(), seeds 1..100); override per deployment
DEFAULT_STAGE1_THRESHOLDS = {
    "manhattan": 39.8,
    "weighted": 4.6,
    "euclidean": 25.9,
    "cosine": 1e-6,
}


@dataclass
class PipelineConfig:
    consistency_params: ConsistencyParams = field(default_factory=ConsistencyParams)
    stage1_threshold: Optional[float] = None   # None = metric default
    stage2_threshold: int = DEFAULT_STAGE2_THRESHOLD
    model: ApiContrastModel = field(default_factory=builtin_model)
    catalogue: FileApiCatalogue = DEFAULT_CATALOGUE

    def resolved_stage1_threshold(self) -> float:
        if self.stage1_threshold is not None:
            if not math.isfinite(self.stage1_threshold):
                raise ValidationError("stage1_threshold must be finite")
            return self.stage1_threshold
        return DEFAULT_STAGE1_THRESHOLDS[self.consistency_params.metric]


@dataclass
class Verdict:
    id: str
    stage1_score: Optional[float]
    stage1_positive: bool
    contrast_score: Optional[int]     # present iff stage-1 positive
    final: str                        # "ransomware" | "benign"
    explanation: list = field(default_factory=list)
    unscorable_reason: Optional[str] = None

    def to_json_dict(self) -> dict:
        doc = {"id": self.id, "stage1_score": self.stage1_score,
               "stage1_positive": self.stage1_positive}
        if self.contrast_score is not None:
            doc["contrast_score"] = self.contrast_score
        doc["final"] = self.final
        if self.unscorable_reason is not None:
            doc["reason"] = self.unscorable_reason
        doc["explanation"] = self.explanation
        return doc


def classify(trace: Trace, config: PipelineConfig = PipelineConfig()) -> Verdict:
    """Produce a verdict for one trace.

    Traces stage 1 cannot score (no file activity, or shorter than one
    window frame) come back benign with an ``unscorable`` reason, so batch
    runs complete; that flag keeps them distinguishable from scored benign.
    """
    params = config.consistency_params
    try:
        score = trace_consistency(trace, params, config.catalogue)
    except UnscorableTraceError as exc:
        return Verdict(trace.id, None, False, None, "benign",
                       [{"kind": "unscorable", "detail": str(exc)}],
                       unscorable_reason="unscorable")
    threshold = config.resolved_stage1_threshold()
    positive = score.aggregate < threshold
    start, end = score.best_span(params)
    explanation = [{"kind": "stage1_window", "start": start, "end": end,
                    "score": score.aggregate, "metric": params.metric,
                    "threshold": threshold}]
    if not positive:
        return Verdict(trace.id, score.aggregate, False, None, "benign",
                       explanation)
    details: list = []
    contrast = api_contrast_score(trace, config.model, details)
    explanation.extend(details)
    final = "benign" if contrast <= config.stage2_threshold else "ransomware"
    explanation.append({"kind": "stage2", "contrast_score": contrast,
                        "threshold": config.stage2_threshold,
                        "overturned": final == "benign"})
    return Verdict(trace.id, score.aggregate, True, contrast, final,
                   explanation)


# ---------------------------------------------------------------------------
# calibration

@dataclass
class CalibrationReport:
    threshold: float
    separable: bool
    warning: Optional[str]
    per_trace: list                    # (id, label, aggregate score)
    skipped: list = field(default_factory=list)   # (id, reason)


def calibrate_stage1(corpus: Iterable[Trace],
                     params: ConsistencyParams = ConsistencyParams(),
                     catalogue: FileApiCatalogue = DEFAULT_CATALOGUE
                     ) -> CalibrationReport:
    """Pick a stage-1 threshold from a labeled corpus.

    When the classes separate (every ransomware aggregate below every benign
    aggregate) the threshold is the midpoint of the gap. Otherwise the
    candidate cut maximizing recall first, then F1, wins, and the report
    carries a warning. Scores below the threshold classify as positive.
    """
    rows = []
    skipped = []
    for trace in corpus:
        if trace.label not in ("ransomware", "benign"):
            raise ValidationError(f"trace {trace.id!r} is unlabeled")
        try:
            score = trace_consistency(trace, params, catalogue)
        except UnscorableTraceError as exc:
            skipped.append((trace.id, str(exc)))
            continue
        rows.append((trace.id, trace.label, score.aggregate))
    rw = sorted(s for _, lab, s in rows if lab == "ransomware")
    benign = sorted(s for _, lab, s in rows if lab == "benign")
    if not rw or not benign:
        raise ValidationError("calibration corpus needs both labels")

    if rw[-1] < benign[0]:
        threshold = 0.5 * (rw[-1] + benign[0])
        return CalibrationReport(threshold, True, None, rows, skipped)

    # overlap: scan cuts between adjacent distinct scores, recall-first
    scores = sorted({s for _, _, s in rows})
    candidates = [0.5 * (a + b) for a, b in zip(scores, scores[1:])]
    candidates.append(scores[-1] + 1.0)
    best = None
    for cut in candidates:
        tp = sum(1 for s in rw if s < cut)
        fp = sum(1 for s in benign if s < cut)
        fn = len(rw) - tp
        recall = tp / (tp + fn) if (tp + fn) else 1.0
        precision = tp / (tp + fp) if (tp + fp) else 1.0
        f1 = 2 * precision * recall / (precision + recall) \
            if (precision + recall) else 0.0
        key = (recall, f1, -cut)
        if best is None or key > best[0]:
            best = (key, cut)
    threshold = best[1]
    warning = ("classes do not separate; threshold maximizes recall-first "
               "F-score")
    if max(rw) == max(benign) and min(rw) == min(benign) and rw == benign:
        warning = "labels have identical score profiles; threshold degenerate"
    return CalibrationReport(threshold, False, warning, rows, skipped)


# ---------------------------------------------------------------------------
# batch evaluation

@dataclass
class BatchSummary:
    n_traces: int
    n_labeled: int
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float

    def to_json_dict(self) -> dict:
        return {"n_traces": self.n_traces, "n_labeled": self.n_labeled,
                "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "precision": self.precision, "recall": self.recall}


def summarize(pairs) -> BatchSummary:
    """Precision/recall for the ransomware class over (label, final) pairs.

    Unknown labels are excluded. Empty denominators report 1.0 (no claims
    made, none wrong)."""
    tp = fp = fn = tn = 0
    labeled = 0
    total = 0
    for label, final in pairs:
        total += 1
        if label not in ("ransomware", "benign"):
            continue
        labeled += 1
        if final == "ransomware":
            if label == "ransomware":
                tp += 1
            else:
                fp += 1
        else:
            if label == "ransomware":
                fn += 1
            else:
                tn += 1
    precision = tp / (tp + fp) if (tp + fp) else 1.0
    recall = tp / (tp + fn) if (tp + fn) else 1.0
    return BatchSummary(total, labeled, tp, fp, fn, tn, precision, recall)


def batch_classify(corpus: Iterable[Trace],
                   config: PipelineConfig = PipelineConfig()
                   ) -> tuple[list[Verdict], BatchSummary]:
    """Classify every trace; verdicts come back ordered by trace id.

    Traces with unknown labels get verdicts but stay out of the summary.
    """
    traces = sorted(corpus, key=lambda t: t.id)
    verdicts = [classify(t, config) for t in traces]
    summary = summarize((t.label, v.final) for t, v in zip(traces, verdicts))
    return verdicts, summary

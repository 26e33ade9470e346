"""API contrast scoring: corpus statistics, set training and trace scoring.

A labeled corpus splits non-file APIs into three sets: R (prevalent in
ransomware, rare in benign software), B (the reverse) and O (common to
both, but called far more often by ransomware, gated by a per-API frequency
limit). A trace scores +1 per distinct R API, +1 per O API whose call total
exceeds its duration-scaled limit, and -1 per distinct B API; the sum is
the contrast score used to refine stage-1 positives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import ValidationError
from .trace import Trace
from .windows import DEFAULT_CATALOGUE, FileApiCatalogue

#: occurrence-ratio threshold into R, benign-prevalence threshold into B,
#: frequency-ratio threshold (and limit multiplier) into O
DEFAULT_TAUS = (2.0, 3.0, 2.0)
DEFAULT_REFERENCE_DURATION = 300.0


@dataclass(frozen=True)
class ApiContrastModel:
    set_r: frozenset
    set_b: frozenset
    set_o: dict                      # api -> calls allowed per reference duration
    tau1: float = DEFAULT_TAUS[0]
    tau2: float = DEFAULT_TAUS[1]
    tau3: float = DEFAULT_TAUS[2]
    reference_duration: float = DEFAULT_REFERENCE_DURATION
    min_support: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "set_r", frozenset(self.set_r))
        object.__setattr__(self, "set_b", frozenset(self.set_b))
        object.__setattr__(self, "set_o", dict(self.set_o))
        o_keys = set(self.set_o)
        if self.set_r & self.set_b or self.set_r & o_keys or self.set_b & o_keys:
            raise ValidationError("R, B and O sets must be pairwise disjoint")
        for api, limit in self.set_o.items():
            if limit <= 0:
                raise ValidationError(f"O frequency limit for {api} must be positive")
        if self.tau1 <= 0 or self.tau2 <= 0 or self.tau3 <= 0:
            raise ValidationError("taus must be positive")
        if self.reference_duration <= 0:
            raise ValidationError("reference_duration must be positive")

    def max_score(self) -> int:
        return len(self.set_r) + len(self.set_o)


def builtin_model() -> ApiContrastModel:
    """The built-in contrast model shipped with the package.

    Frequency limits are calls allowed per 300-second execution; they scale
    linearly with the actual trace duration when applied.
    """
    set_r = frozenset({
        "CoInitializeSecurity", "WriteConsoleW", "Process32NextW",
        "CreateToolhelp32Snapshot", "Process32FirstW",
        "CryptEncrypt", "CryptExportKey", "CryptGenKey",
    })
    set_o = {
        "NtAllocateVirtualMemory": 6412,
        "NtFreeVirtualMemory": 2320,
        "OpenSCManagerW": 20,
        "OpenServiceW": 32,
        "NtOpenThread": 16,
        "RegDeleteValueW": 56,
        "GetUserNameExW": 28,
        "CoCreateInstanceEx": 8,
        "CryptAcquireContextA": 64,
        "CryptCreateHash": 52,
    }
    set_b = frozenset({
        "NtDeleteKey", "SendNotifyMessageW", "GetKeyState", "DrawTextExW",
        "FindResourceW", "GetCursorPos", "SizeofResource", "FindResourceExW",
        "FindWindowW", "NtCreateKey", "GetForegroundWindow",
        "GetFileVersionInfoSizeW", "GetFileVersionInfoW", "EnumWindows",
        "NtReadVirtualMemory", "OleInitialize", "FindResourceA",
        "RegCreateKeyExA",
    })
    return ApiContrastModel(set_r, set_b, set_o)


# ---------------------------------------------------------------------------
# corpus statistics and training

@dataclass
class ApiStats:
    occr_r: int = 0
    occr_b: int = 0
    freq_r_mean: float = 0.0   # mean calls per reference duration, users only
    freq_b_mean: float = 0.0


@dataclass
class CorpusStats:
    n_r: int
    n_b: int
    per_api: dict = field(default_factory=dict)


def collect_corpus_stats(corpus: Iterable[Trace],
                         reference_duration: float = DEFAULT_REFERENCE_DURATION
                         ) -> CorpusStats:
    """Exact per-API occurrence and mean-frequency accounting.

    Frequencies are normalized to the reference duration: a trace's call
    total is scaled by reference_duration / trace duration, so traces of
    different lengths contribute comparable rates.
    """
    n_r = n_b = 0
    occ: dict[str, ApiStats] = {}
    freq_sums: dict[str, list] = {}
    for trace in corpus:
        if trace.label == "ransomware":
            n_r += 1
        elif trace.label == "benign":
            n_b += 1
        else:
            raise ValidationError(
                f"trace {trace.id!r} is unlabeled; corpus traces need "
                "ransomware/benign labels")
        duration = trace.duration if trace.duration > 0 else 1.0
        scale = reference_duration / duration
        for api, total in trace.api_totals().items():
            st = occ.setdefault(api, ApiStats())
            sums = freq_sums.setdefault(api, [0.0, 0.0])
            if trace.label == "ransomware":
                st.occr_r += 1
                sums[0] += total * scale
            else:
                st.occr_b += 1
                sums[1] += total * scale
    if n_r < 1 or n_b < 1:
        raise ValidationError("corpus needs at least one trace of each label")
    for api, st in occ.items():
        sr, sb = freq_sums[api]
        st.freq_r_mean = sr / st.occr_r if st.occr_r else 0.0
        st.freq_b_mean = sb / st.occr_b if st.occr_b else 0.0
    return CorpusStats(n_r, n_b, occ)


def train_contrast(stats: CorpusStats,
                   tau1: float = DEFAULT_TAUS[0],
                   tau2: float = DEFAULT_TAUS[1],
                   tau3: float = DEFAULT_TAUS[2],
                   catalogue: FileApiCatalogue = DEFAULT_CATALOGUE,
                   reference_duration: float = DEFAULT_REFERENCE_DURATION,
                   min_support: float = 0.05,
                   tau2_as_printed: bool = False) -> ApiContrastModel:
    """Assign APIs to the R/B/O sets from corpus occurrence rates.

    With occurrence rates r = occr_R/n_R and b = occr_B/n_B:

    * r/b >= tau1 puts an API in R (b = 0 with r > 0 counts as infinite);
    * b/r >= tau2 puts it in B (benign prevalence; pass ``tau2_as_printed``
      for the literal alternative reading r/b <= tau2, which overlaps the R
      rule for ratios in [tau1, tau2] -- R wins there);
    * ratios strictly between 1/tau2 and tau1 with a ransomware/benign
      frequency ratio >= tau3 go to O, with limit tau3 * benign mean.

    APIs below ``min_support`` occurrence in both classes stay unclassified,
    as do all file-catalogue APIs (stage 1 already accounts for those).
    """
    if tau1 <= 0 or tau2 <= 0 or tau3 <= 0:
        raise ValidationError("taus must be positive")
    set_r = set()
    set_b = set()
    set_o = {}
    for api, st in stats.per_api.items():
        if api in catalogue:
            continue
        r = st.occr_r / stats.n_r
        b = st.occr_b / stats.n_b
        if r < min_support and b < min_support:
            continue
        if b == 0.0:
            ratio = float("inf") if r > 0 else 0.0
        else:
            ratio = r / b
        if ratio >= tau1:
            set_r.add(api)
        elif (tau2_as_printed and ratio <= tau2) or \
                (not tau2_as_printed and r > 0 and b / r >= tau2) or \
                (not tau2_as_printed and r == 0.0 and b > 0.0):
            set_b.add(api)
        elif 1.0 / tau2 < ratio < tau1 and st.freq_b_mean > 0 \
                and st.freq_r_mean / st.freq_b_mean >= tau3:
            set_o[api] = tau3 * st.freq_b_mean
    return ApiContrastModel(frozenset(set_r), frozenset(set_b), set_o,
                            tau1, tau2, tau3, reference_duration, min_support)


# ---------------------------------------------------------------------------
# scoring

def _o_limit(model: ApiContrastModel, api: str, trace_duration: float) -> float:
    """Frequency limit scaled linearly to the trace duration."""
    scale = trace_duration / model.reference_duration if trace_duration > 0 else 1.0
    return model.set_o[api] * scale


def rw_api_score(trace: Trace, model: ApiContrastModel,
                 details: Optional[list] = None) -> int:
    """+1 per distinct R API, +1 per O API over its duration-scaled limit."""
    totals = trace.api_totals()
    duration = trace.duration
    score = 0
    for api in sorted(totals):
        if api in model.set_r:
            score += 1
            if details is not None:
                details.append({"api": api, "set": "R", "contribution": 1})
        elif api in model.set_o:
            limit = _o_limit(model, api, duration)
            if totals[api] > limit:
                score += 1
                if details is not None:
                    details.append({"api": api, "set": "O", "contribution": 1,
                                    "calls": totals[api], "limit": limit})
    return score


def benign_api_score(trace: Trace, model: ApiContrastModel,
                     details: Optional[list] = None) -> int:
    """-1 per distinct B API present in the trace."""
    score = 0
    for api in sorted(trace.distinct_apis()):
        if api in model.set_b:
            score -= 1
            if details is not None:
                details.append({"api": api, "set": "B", "contribution": -1})
    return score


def api_contrast_score(trace: Trace, model: ApiContrastModel,
                       details: Optional[list] = None) -> int:
    """Ransomware score plus benign score; lower means more benign-looking."""
    return rw_api_score(trace, model, details) \
        + benign_api_score(trace, model, details)


# ---------------------------------------------------------------------------
# model file round trip

def model_to_json(model: ApiContrastModel) -> str:
    doc = {
        "tau": [model.tau1, model.tau2, model.tau3],
        "reference_duration": model.reference_duration,
        "R": sorted(model.set_r),
        "B": sorted(model.set_b),
        "O": {api: model.set_o[api] for api in sorted(model.set_o)},
    }
    return json.dumps(doc, indent=2) + "\n"


def model_from_json(text) -> ApiContrastModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid model JSON: {exc.msg}") from None
    try:
        tau1, tau2, tau3 = doc["tau"]
        return ApiContrastModel(
            frozenset(doc["R"]), frozenset(doc["B"]), dict(doc["O"]),
            float(tau1), float(tau2), float(tau3),
            float(doc.get("reference_duration", DEFAULT_REFERENCE_DURATION)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model document: {exc}") from None


def load_model(path) -> ApiContrastModel:
    if str(path) == "builtin":
        return builtin_model()
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(fh.read())


def save_model(model: ApiContrastModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))

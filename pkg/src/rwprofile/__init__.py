"""Ransomware-likeness classification of API call traces.

Stage 1 scores the consistency of file-API usage over sliding windows;
stage 2 refines stage-1 positives with an API contrast score trained on
(or shipped for) labeled corpora. Auxiliary metrics (evenness, changepoint
counts, distribution baselines) and a deterministic synthetic trace
generator round out the toolkit.
"""

from .changepoint import BocdParams, bocd_posterior, count_changepoints
from .consistency import (ConsistencyParams, TraceScore, cosine_consistency,
                          euclidean_consistency, manhattan_consistency,
                          trace_consistency, weighted_consistency)
from .contrast import (ApiContrastModel, api_contrast_score, benign_api_score,
                       builtin_model, collect_corpus_stats, load_model,
                       rw_api_score, save_model, train_contrast)
from .errors import (InsufficientDurationError, NoFileActivityError,
                     ParseError, UnscorableTraceError, ValidationError)
from .evenness import EvennessResult, bin_evenness, trace_evenness
from .pipeline import (PipelineConfig, Verdict, batch_classify,
                       calibrate_stage1, classify)
from .synthgen import GenSpec, default_corpus_specs, generate, generate_corpus
from .trace import (ApiEvent, Trace, load_trace, normalize,
                    parse_sandbox_report, parse_trace_native, save_trace,
                    serialize_native)
from .windows import (DEFAULT_FILE_APIS, BinSeries, FileApiCatalogue,
                      WindowVector, bin_events, top_k_file_apis, window_vector)

__version__ = "0.1.0"

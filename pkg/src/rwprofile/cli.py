"""Command-line surface: ingest, score, classify, train-contrast, gen, report.

stdout carries machine-parseable line-delimited JSON only; human-oriented
tables go to stderr behind --pretty. Exit codes: 0 success, 1 validation or
usage error, 2 I/O error. Flag precedence: explicit flag, then config-file
entry, then built-in default.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .changepoint import BocdParams, count_changepoints
from .consistency import ConsistencyParams, trace_consistency
from .contrast import (collect_corpus_stats, load_model, save_model,
                       train_contrast)
from .errors import UnscorableTraceError, ValidationError
from .evenness import trace_evenness
from .pipeline import (DEFAULT_STAGE2_THRESHOLD, PipelineConfig,
                       calibrate_stage1, classify, summarize)
from .synthgen import default_corpus_specs, generate_corpus, specs_from_json
from .trace import (Trace, load_trace, normalize, parse_sandbox_report,
                    serialize_native)
from .windows import DEFAULT_CATALOGUE, FileApiCatalogue

_SCORE_METRICS = ("cosine", "manhattan", "weighted", "euclidean",
                  "evenness-normalized", "evenness-squared", "changepoints")

# defaults resolved after the config file layer
_DEFAULTS = {
    "metric": "manhattan",
    "scores": "manhattan",
    "prev_len": 3.0,
    "curr_len": 1.0,
    "top_k": 10,
    "smooth_w": 5,
    "aggregate": "min",
    "bin_width": 1.0,
    "stage2_threshold": DEFAULT_STAGE2_THRESHOLD,
    "model": "builtin",
    "jobs": 1,
    "tau1": 2.0,
    "tau2": 3.0,
    "tau3": 2.0,
    "reference_duration": 300.0,
    "min_support": 0.05,
    "hazard_lambda": 200.0,
    "min_gap": 3.0,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="rwprofile",
                     description="Ransomware-likeness classification of API "
                                 "call traces")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add_common(p):
        p.add_argument("--config", help="JSON config file; explicit flags win")
        p.add_argument("--pretty", action="store_true",
                       help="also print human-readable tables to stderr")

    def add_window_flags(p):
        p.add_argument("--metric", choices=("cosine", "manhattan", "weighted",
                                            "euclidean"))
        p.add_argument("--prev-len", type=float, dest="prev_len")
        p.add_argument("--curr-len", type=float, dest="curr_len")
        p.add_argument("--top-k", type=int, dest="top_k")
        p.add_argument("--smooth-w", type=int, dest="smooth_w")
        p.add_argument("--aggregate", choices=("min", "mean"))
        p.add_argument("--bin-width", type=float, dest="bin_width")
        p.add_argument("--catalogue", help="file-API catalogue file")

    p = sub.add_parser("ingest", help="convert a sandbox report to the "
                                      "native trace format")
    add_common(p)
    p.add_argument("--input", required=True, help="sandbox report JSON")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--id", dest="trace_id", help="override the trace id")

    p = sub.add_parser("score", help="emit per-trace metric scores as JSON lines")
    add_common(p)
    p.add_argument("--trace", help="native trace file")
    p.add_argument("--corpus", help="corpus manifest or directory")
    p.add_argument("--scores",
                   help="comma-separated metrics: "
                        + ",".join(_SCORE_METRICS) + ",all (default manhattan)")
    add_window_flags(p)
    p.add_argument("--hazard-lambda", type=float, dest="hazard_lambda")
    p.add_argument("--min-gap", type=float, dest="min_gap")

    p = sub.add_parser("classify", help="single or batch two-stage verdicts")
    add_common(p)
    p.add_argument("--trace", help="native trace file")
    p.add_argument("--corpus", help="corpus manifest or directory")
    p.add_argument("--model", help="contrast model file or 'builtin'")
    p.add_argument("--stage1-threshold", type=float, dest="stage1_threshold")
    p.add_argument("--stage2-threshold", type=int, dest="stage2_threshold")
    p.add_argument("--calibrate", action="store_true",
                   help="calibrate the stage-1 threshold on the labeled corpus "
                        "before classifying it")
    p.add_argument("--jobs", type=int, help="parallel workers for batch runs")
    add_window_flags(p)

    p = sub.add_parser("train-contrast", help="train a contrast model from a "
                                              "labeled corpus")
    add_common(p)
    p.add_argument("--corpus", required=True, help="corpus manifest or directory")
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--tau1", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--tau3", type=float)
    p.add_argument("--reference-duration", type=float, dest="reference_duration")
    p.add_argument("--min-support", type=float, dest="min_support")
    p.add_argument("--tau2-as-printed", action="store_true",
                   dest="tau2_as_printed")
    p.add_argument("--catalogue", help="file-API catalogue file")

    p = sub.add_parser("gen", help="write a synthetic corpus")
    add_common(p)
    p.add_argument("--manifest", help="generation spec JSON array")
    p.add_argument("--preset", choices=("default",),
                   help="use the built-in 100-trace corpus")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="precision/recall from verdict lines "
                                      "plus labels")
    add_common(p)
    p.add_argument("--verdicts", required=True, help="verdict JSON lines file")
    p.add_argument("--corpus", required=True,
                   help="corpus manifest or directory with labels")
    return parser


# ---------------------------------------------------------------------------
# config layering

def _resolve(args, key):
    val = getattr(args, key, None)
    if val is not None:
        return val
    cfg = getattr(args, "_config_doc", None)
    if cfg:
        section = cfg.get(args.command, {})
        if key in section:
            return section[key]
    return _DEFAULTS.get(key)


def _load_config(args):
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"invalid config JSON: {exc.msg}") from None
        if not isinstance(doc, dict):
            raise ValidationError("config file must hold a JSON object")
        args._config_doc = doc
    else:
        args._config_doc = None


def _consistency_params(args) -> ConsistencyParams:
    return ConsistencyParams(
        metric=_resolve(args, "metric"),
        prev_len=float(_resolve(args, "prev_len")),
        curr_len=float(_resolve(args, "curr_len")),
        k=int(_resolve(args, "top_k")),
        smooth_w=int(_resolve(args, "smooth_w")),
        aggregate=_resolve(args, "aggregate"),
        bin_width=float(_resolve(args, "bin_width")))


def _catalogue(args) -> FileApiCatalogue:
    path = _resolve(args, "catalogue")
    return FileApiCatalogue.load(path) if path else DEFAULT_CATALOGUE


# ---------------------------------------------------------------------------
# corpus loading

def _manifest_path(corpus: str) -> Path:
    p = Path(corpus)
    if p.is_dir():
        p = p / "corpus.json"
    if not p.exists():
        raise FileNotFoundError(f"corpus manifest not found: {p}")
    return p


def _load_manifest(corpus: str) -> list[dict]:
    p = _manifest_path(corpus)
    with open(p, "r", encoding="utf-8") as fh:
        try:
            rows = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid corpus manifest: {exc.msg}") from None
    if not isinstance(rows, list):
        raise ValidationError("corpus manifest must be a JSON array")
    base = p.parent
    out = []
    for row in rows:
        if not isinstance(row, dict) or "path" not in row:
            raise ValidationError("corpus manifest rows need a \"path\"")
        out.append({"path": str(base / row["path"]),
                    "label": row.get("label", "unknown"),
                    "id": row.get("id")})
    return out


def _load_corpus(corpus: str) -> list[Trace]:
    traces = []
    for row in _load_manifest(corpus):
        trace = load_trace(row["path"])
        if row["label"] != trace.label or (row["id"] and row["id"] != trace.id):
            trace = trace.with_meta(id=row["id"], label=row["label"])
        traces.append(trace)
    return traces


# ---------------------------------------------------------------------------
# subcommands

def _cmd_ingest(args) -> int:
    with open(args.input, "rb") as fh:
        trace = parse_sandbox_report(fh.read())
    if args.trace_id:
        trace = trace.with_meta(id=args.trace_id)
    trace, dropped = normalize(trace)
    if dropped:
        print(f"dropped {dropped} events past the declared duration",
              file=sys.stderr)
    data = serialize_native(trace)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
    return 0


def _score_one(trace: Trace, metrics, args, catalogue) -> dict:
    row: dict = {"id": trace.id}
    for metric in metrics:
        try:
            if metric in ("cosine", "manhattan", "weighted", "euclidean"):
                params = ConsistencyParams(
                    metric=metric,
                    prev_len=float(_resolve(args, "prev_len")),
                    curr_len=float(_resolve(args, "curr_len")),
                    k=int(_resolve(args, "top_k")),
                    smooth_w=int(_resolve(args, "smooth_w")),
                    aggregate=_resolve(args, "aggregate"),
                    bin_width=float(_resolve(args, "bin_width")))
                row[metric] = trace_consistency(trace, params, catalogue).aggregate
            elif metric.startswith("evenness-"):
                kind = metric.split("-", 1)[1]
                row[metric] = trace_evenness(
                    trace, kind, catalogue, int(_resolve(args, "top_k")),
                    float(_resolve(args, "bin_width"))).average
            elif metric == "changepoints":
                params = BocdParams(
                    hazard_lambda=float(_resolve(args, "hazard_lambda")),
                    min_gap=float(_resolve(args, "min_gap")))
                row[metric] = count_changepoints(
                    trace, params, catalogue, int(_resolve(args, "top_k")),
                    float(_resolve(args, "bin_width")))
        except UnscorableTraceError as exc:
            row[metric] = None
            row.setdefault("reason", str(exc))
    return row


def _cmd_score(args) -> int:
    requested = getattr(args, "scores", None)
    if requested is None and getattr(args, "metric", None):
        requested = args.metric       # `score --metric euclidean` shorthand
    if requested is None:
        requested = _resolve(args, "scores")
    metrics = list(_SCORE_METRICS) if requested == "all" \
        else [m.strip() for m in requested.split(",") if m.strip()]
    for m in metrics:
        if m not in _SCORE_METRICS:
            raise ValidationError(f"unknown score metric {m!r}")
    catalogue = _catalogue(args)
    traces = _gather_traces(args)
    for trace in traces:
        print(json.dumps(_score_one(trace, metrics, args, catalogue)))
    return 0


def _gather_traces(args) -> list[Trace]:
    if getattr(args, "trace", None):
        return [load_trace(args.trace)]
    if getattr(args, "corpus", None):
        return sorted(_load_corpus(args.corpus), key=lambda t: t.id)
    raise ValidationError("pass --trace or --corpus")


_WORKER_CONFIG: dict = {}


def _init_worker(config, catalogue):
    _WORKER_CONFIG["config"] = config
    _WORKER_CONFIG["catalogue"] = catalogue


def _classify_path(row) -> tuple[str, dict]:
    trace = load_trace(row["path"])
    if row["label"] != trace.label or (row["id"] and row["id"] != trace.id):
        trace = trace.with_meta(id=row["id"], label=row["label"])
    verdict = classify(trace, _WORKER_CONFIG["config"])
    return trace.label, verdict.to_json_dict()


def _cmd_classify(args) -> int:
    params = _consistency_params(args)
    catalogue = _catalogue(args)
    model = load_model(_resolve(args, "model"))
    stage1 = getattr(args, "stage1_threshold", None)
    if stage1 is None:
        cfg_doc = getattr(args, "_config_doc", None)
        if cfg_doc and "stage1_threshold" in cfg_doc.get("classify", {}):
            stage1 = cfg_doc["classify"]["stage1_threshold"]

    if getattr(args, "trace", None):
        config = PipelineConfig(params, stage1,
                                int(_resolve(args, "stage2_threshold")),
                                model, catalogue)
        trace = load_trace(args.trace)
        print(json.dumps(classify(trace, config).to_json_dict()))
        return 0
    if not getattr(args, "corpus", None):
        raise ValidationError("pass --trace or --corpus")

    rows = sorted(_load_manifest(args.corpus), key=lambda r: r["id"] or r["path"])
    if args.calibrate:
        traces = _load_corpus(args.corpus)
        report = calibrate_stage1(traces, params, catalogue)
        stage1 = report.threshold
        if report.warning:
            print(f"calibration: {report.warning}", file=sys.stderr)
        print(json.dumps({"calibrated_stage1_threshold": stage1,
                          "separable": report.separable}))
    config = PipelineConfig(params, stage1,
                            int(_resolve(args, "stage2_threshold")),
                            model, catalogue)
    jobs = int(_resolve(args, "jobs"))
    results: list[tuple[str, dict]] = []
    if jobs > 1:
        # spawn, not fork: the parent holds live thread pools (polars) that a
        # forked child would inherit mid-lock
        ctx = multiprocessing.get_context("spawn")
        chunk = max(1, len(rows) // (4 * jobs))
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx,
                                 initializer=_init_worker,
                                 initargs=(config, catalogue)) as pool:
            results = list(pool.map(_classify_path, rows, chunksize=chunk))
    else:
        _init_worker(config, catalogue)
        results = [_classify_path(row) for row in rows]

    results.sort(key=lambda pair: pair[1]["id"])
    labeled = []
    for label, doc in results:
        print(json.dumps(doc))
        labeled.append((label, doc["final"]))
    if any(lab in ("ransomware", "benign") for lab, _ in labeled):
        summary = summarize(labeled)
        print(json.dumps({"summary": summary.to_json_dict()}))
        if args.pretty:
            _print_summary_table(summary)
    return 0


def _print_summary_table(summary) -> None:
    rows = [("traces", summary.n_traces), ("labeled", summary.n_labeled),
            ("tp", summary.tp), ("fp", summary.fp), ("fn", summary.fn),
            ("tn", summary.tn),
            ("precision", f"{summary.precision:.4f}"),
            ("recall", f"{summary.recall:.4f}")]
    width = max(len(k) for k, _ in rows)
    for key, val in rows:
        print(f"{key:<{width}}  {val}", file=sys.stderr)


def _cmd_train_contrast(args) -> int:
    traces = _load_corpus(args.corpus)
    catalogue = _catalogue(args)
    ref = float(_resolve(args, "reference_duration"))
    stats = collect_corpus_stats(traces, ref)
    model = train_contrast(
        stats,
        tau1=float(_resolve(args, "tau1")),
        tau2=float(_resolve(args, "tau2")),
        tau3=float(_resolve(args, "tau3")),
        catalogue=catalogue,
        reference_duration=ref,
        min_support=float(_resolve(args, "min_support")),
        tau2_as_printed=bool(getattr(args, "tau2_as_printed", False)))
    save_model(model, args.out)
    print(json.dumps({"model": args.out, "R": len(model.set_r),
                      "B": len(model.set_b), "O": len(model.set_o)}))
    return 0


def _cmd_gen(args) -> int:
    if args.manifest:
        with open(args.manifest, "r", encoding="utf-8") as fh:
            specs = specs_from_json(fh.read())
    elif args.preset:
        specs = default_corpus_specs()
    else:
        raise ValidationError("pass --manifest or --preset")
    generate_corpus(specs, Path(args.out))
    print(json.dumps({"written": len(specs), "dir": str(args.out),
                      "manifest": str(Path(args.out) / "corpus.json")}))
    return 0


def _cmd_report(args) -> int:
    labels = {}
    for row in _load_manifest(args.corpus):
        rid = row["id"] or Path(row["path"]).stem
        labels[rid] = row["label"]
    pairs = []
    unknown = 0
    with open(args.verdicts, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if "final" not in doc:
                continue  # summary or calibration line
            label = labels.get(doc.get("id"), "unknown")
            if label not in ("ransomware", "benign"):
                unknown += 1
            pairs.append((label, doc["final"]))
    summary = summarize(pairs)
    doc = summary.to_json_dict()
    doc["unlabeled"] = unknown
    print(json.dumps(doc))
    if args.pretty:
        _print_summary_table(summary)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "score": _cmd_score,
    "classify": _cmd_classify,
    "train-contrast": _cmd_train_contrast,
    "gen": _cmd_gen,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        _load_config(args)
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"rwprofile: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"rwprofile: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

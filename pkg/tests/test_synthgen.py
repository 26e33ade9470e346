import json

import pytest

from rwprofile.contrast import api_contrast_score, builtin_model
from rwprofile.errors import ValidationError
from rwprofile.synthgen import (GenSpec, default_corpus_specs, generate,
                                generate_corpus, specs_from_json)
from rwprofile.trace import serialize_native
from rwprofile.windows import DEFAULT_CATALOGUE

MODEL = builtin_model()


def test_determinism_byte_identical():
    for kind in ("ransomware", "benign_random", "git_like", "delete"):
        spec = GenSpec(kind, duration=45.0, seed=11)
        a = serialize_native(generate(spec))
        b = serialize_native(generate(spec))
        assert a == b


def test_different_seeds_differ():
    a = serialize_native(generate(GenSpec("ransomware", duration=30.0, seed=1)))
    b = serialize_native(generate(GenSpec("ransomware", duration=30.0, seed=2)))
    assert a != b


def test_spec_validation():
    with pytest.raises(ValidationError):
        GenSpec("trojan")
    with pytest.raises(ValidationError):
        GenSpec("ransomware", duration=0)
    with pytest.raises(ValidationError):
        GenSpec("ransomware", rate=-5)


def test_ransomware_basis_size_clamped():
    for n, expect in ((1, 6), (7, 7), (99, 10)):
        trace = generate(GenSpec("ransomware", duration=30.0, seed=3, n_apis=n))
        file_apis = {a for a in trace.distinct_apis() if a in DEFAULT_CATALOGUE}
        assert len(file_apis) == expect


def test_extract_dominant_api():
    for seed in (1, 5, 9):
        trace = generate(GenSpec("extract", duration=60.0, seed=seed))
        totals = trace.api_totals()
        file_totals = {a: c for a, c in totals.items() if a in DEFAULT_CATALOGUE}
        top = max(file_totals.values())
        assert top / sum(file_totals.values()) >= 0.90


def test_copy_move_exactly_three_file_apis():
    for kind in ("copy", "move"):
        trace = generate(GenSpec(kind, duration=40.0, seed=2))
        file_apis = {a for a in trace.distinct_apis() if a in DEFAULT_CATALOGUE}
        assert len(file_apis) == 3


def test_two_phase_kinds_switch_api_sets():
    from rwprofile.windows import bin_events
    for kind in ("compress", "encrypt_tool", "delete"):
        trace = generate(GenSpec(kind, duration=60.0, seed=6))
        series = bin_events(trace)
        head = series.counts[:10].sum(axis=0)
        tail = series.counts[-10:].sum(axis=0)
        head_apis = {series.apis[i] for i in range(len(head))
                     if head[i] > 0 and series.apis[i] in DEFAULT_CATALOGUE}
        tail_apis = {series.apis[i] for i in range(len(tail))
                     if tail[i] > 0 and series.apis[i] in DEFAULT_CATALOGUE}
        assert head_apis and tail_apis and head_apis != tail_apis


def test_git_like_contrast_profile():
    for seed in (55, 65, 75, 85, 95):
        trace = generate(GenSpec("git_like", duration=120.0, seed=seed))
        apis = trace.distinct_apis()
        b_hits = len(apis & MODEL.set_b)
        r_hits = len(apis & MODEL.set_r)
        assert b_hits >= 10
        assert r_hits <= 2
        assert api_contrast_score(trace, MODEL) <= -10


def test_ransomware_contrast_stays_above_refinement():
    for seed in range(1, 51):
        trace = generate(GenSpec("ransomware", duration=60.0, seed=seed))
        assert api_contrast_score(trace, MODEL) > -10


def test_evenness_ordering_seed7():
    from rwprofile.evenness import trace_evenness
    rw = generate(GenSpec("ransomware", duration=120.0, seed=7))
    br = generate(GenSpec("benign_random", duration=120.0, seed=7))
    assert trace_evenness(rw, "normalized").average < \
        trace_evenness(br, "normalized").average


def test_matched_seed_stage1_separation():
    # every benign shape except git_like (the designed stage-1 false
    # positive) scores above ransomware at the same seed and duration
    from rwprofile.consistency import ConsistencyParams, trace_consistency
    params = ConsistencyParams(metric="manhattan")
    for seed in (3, 17, 41):
        rw = trace_consistency(
            generate(GenSpec("ransomware", duration=100.0, seed=seed)),
            params).aggregate
        for kind in ("benign_random", "copy", "move", "extract",
                     "compress", "encrypt_tool", "delete"):
            benign = trace_consistency(
                generate(GenSpec(kind, duration=100.0, seed=seed)),
                params).aggregate
            assert rw < benign, (kind, seed)
        git = trace_consistency(
            generate(GenSpec("git_like", duration=100.0, seed=seed)),
            params).aggregate
        assert git < rw  # the exception that stage 2 must clear


def test_api_profile_injection():
    trace = generate(GenSpec("ransomware", duration=30.0, seed=4,
                             api_profile=("MyOddApi",)))
    assert "MyOddApi" in trace.distinct_apis()


def test_generate_corpus_writes_files(tmp_path):
    specs = [GenSpec("ransomware", duration=20.0, seed=i) for i in range(1, 6)]
    specs += [GenSpec("copy", duration=20.0, seed=i) for i in range(6, 11)]
    traces = generate_corpus(specs, tmp_path)
    assert len(traces) == 10
    manifest = json.loads((tmp_path / "corpus.json").read_text())
    assert len(manifest) == 10
    for row in manifest:
        assert (tmp_path / row["path"]).exists()
        expected = "ransomware" if row["kind"] == "ransomware" else "benign"
        assert row["label"] == expected


def test_generate_corpus_rejects_empty_and_duplicates(tmp_path):
    with pytest.raises(ValidationError):
        generate_corpus([])
    dup = [GenSpec("copy", duration=10.0, seed=1),
           GenSpec("copy", duration=10.0, seed=1)]
    with pytest.raises(ValidationError, match="duplicate"):
        generate_corpus(dup)


def test_labels_match_kinds():
    assert generate(GenSpec("ransomware", duration=10.0, seed=1)).label == "ransomware"
    for kind in ("benign_random", "copy", "extract", "git_like"):
        assert generate(GenSpec(kind, duration=10.0, seed=1)).label == "benign"


def test_default_corpus_composition():
    specs = default_corpus_specs()
    assert len(specs) == 100
    kinds = [s.kind for s in specs]
    assert kinds.count("ransomware") == 50
    assert kinds.count("git_like") == 5
    assert len({s.resolved_id for s in specs}) == 100
    assert {s.seed for s in specs} == set(range(1, 101))


def test_specs_from_json():
    text = json.dumps([{"kind": "ransomware", "duration": 30, "seed": 2},
                       {"kind": "copy", "seed": 3, "rate": 500}])
    specs = specs_from_json(text)
    assert specs[0].kind == "ransomware"
    assert specs[1].rate == 500.0
    with pytest.raises(ValidationError):
        specs_from_json("{}")
    with pytest.raises(ValidationError):
        specs_from_json(json.dumps([{"duration": 5}]))


def test_events_sorted_and_clamped():
    trace = generate(GenSpec("benign_random", duration=35.0, seed=8))
    ts = trace.timestamps
    assert (ts[1:] >= ts[:-1]).all()
    assert ts[-1] <= 35.0
    assert ts[0] >= 0.0

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwprofile.errors import ValidationError
from rwprofile.trace import ApiEvent, Trace
from rwprofile.windows import (DEFAULT_CATALOGUE, FileApiCatalogue, bin_events,
                               top_k_file_apis, window_vector)


def _trace(events, duration=None):
    return Trace("t", "unknown", duration, [ApiEvent(*e) for e in events])


def test_bin_basic():
    series = bin_events(_trace([(0.1, "A"), (0.9, "A")]), 1.0)
    assert series.bins == {0: {"A": 2}}


def test_boundary_goes_to_higher_bin():
    series = bin_events(_trace([(2.0, "A")]), 1.0)
    assert series.bins == {2: {"A": 1}}
    assert series.total_bins == 3


def test_uniform_events_spread_evenly():
    # direct count oracle: 1000 events uniform over [0, 10)
    events = [(i * 0.01, "NtReadFile") for i in range(1000)]
    series = bin_events(_trace(events), 1.0)
    for b in range(10):
        assert series.bins[b] == {"NtReadFile": 100}


def test_bad_bin_width():
    with pytest.raises(ValidationError):
        bin_events(_trace([(0.1, "A")]), 0.0)


def test_declared_duration_pads_bins():
    series = bin_events(_trace([(0.5, "A")], duration=5.0), 1.0)
    assert series.total_bins == 5


@given(st.lists(st.tuples(st.floats(min_value=0, max_value=500, allow_nan=False),
                          st.sampled_from(["A", "B", "C"])), max_size=200),
       st.sampled_from([0.5, 1.0, 2.0]))
@settings(max_examples=50, deadline=None)
def test_conservation(rows, width):
    t = _trace(rows)
    series = bin_events(t, width)
    assert series.counts.sum() == len(rows)


def test_top_k_ordering():
    events = [(0.1 * i, "NtWriteFile") for i in range(100)]
    events += [(0.1 * i, "NtReadFile") for i in range(50)]
    events += [(0.1 * i, "NtCreateFile") for i in range(10)]
    series = bin_events(_trace(events))
    assert top_k_file_apis(series, k=2) == ["NtWriteFile", "NtReadFile"]


def test_top_k_no_catalogue_hits():
    series = bin_events(_trace([(0.1, "RegOpenKeyExW")]))
    assert top_k_file_apis(series) == []


def test_top_k_tie_breaks_lexicographically():
    events = [(0.1 * i, "NtWriteFile") for i in range(7)]
    events += [(0.1 * i, "NtReadFile") for i in range(7)]
    series = bin_events(_trace(events))
    assert top_k_file_apis(series, k=1) == ["NtReadFile"]


def test_top_k_event_order_invariant():
    rng = np.random.default_rng(3)
    rows = [(float(ts), api) for ts, api in
            zip(rng.uniform(0, 30, 300),
                rng.choice(["NtReadFile", "NtWriteFile", "NtOpenFile"], 300))]
    a = top_k_file_apis(bin_events(_trace(rows)))
    permuted = [rows[i] for i in rng.permutation(len(rows))]
    b = top_k_file_apis(bin_events(_trace(permuted)))
    assert a == b


def test_top_k_requires_positive_k():
    series = bin_events(_trace([(0.1, "NtReadFile")]))
    with pytest.raises(ValidationError):
        top_k_file_apis(series, k=0)


def test_window_vector_mean_rate():
    events = []
    for sec, n in ((0, 3), (1, 6), (2, 9)):
        events += [(sec + 0.001 * j, "NtReadFile") for j in range(n)]
    series = bin_events(_trace(events))
    wv = window_vector(series, ["NtReadFile"], 0.0, 3.0)
    assert wv.values[0] == pytest.approx(6.0)


def test_window_len_one_is_raw_counts():
    events = [(1.1, "NtReadFile"), (1.2, "NtReadFile"), (1.3, "NtWriteFile")]
    series = bin_events(_trace(events))
    wv = window_vector(series, ["NtReadFile", "NtWriteFile"], 1.0, 1.0)
    assert wv.values.tolist() == [2.0, 1.0]


def test_window_vector_matches_bruteforce():
    rng = np.random.default_rng(11)
    rows = [(float(ts), api) for ts, api in
            zip(rng.uniform(0, 20, 500),
                rng.choice(["NtReadFile", "NtWriteFile", "NtOpenFile"], 500))]
    t = _trace(rows)
    series = bin_events(t)
    apis = ["NtOpenFile", "NtReadFile"]
    wv = window_vector(series, apis, 4.0, 3.0)
    # brute-force sum over the raw events in [4, 7)
    for i, api in enumerate(apis):
        total = sum(1 for ts, a in rows if a == api and 4.0 <= (ts // 1.0) < 7.0)
        assert wv.values[i] == pytest.approx(total / 3.0)


def test_window_past_series_end_divides_by_len():
    events = [(0.5, "NtReadFile"), (1.5, "NtReadFile")]
    series = bin_events(_trace(events))
    wv = window_vector(series, ["NtReadFile"], 1.0, 4.0)
    assert wv.values[0] == pytest.approx(1 / 4.0)


def test_full_window_scaled_by_span_recovers_totals():
    rng = np.random.default_rng(5)
    rows = [(float(ts), api) for ts, api in
            zip(rng.uniform(0, 9.99, 400),
                rng.choice(["NtReadFile", "NtWriteFile"], 400))]
    t = _trace(rows, duration=10.0)
    series = bin_events(t)
    wv = window_vector(series, ["NtReadFile", "NtWriteFile"], 0.0, 10.0)
    totals = t.api_totals()
    assert (wv.values * 10.0).tolist() == pytest.approx(
        [totals["NtReadFile"], totals["NtWriteFile"]])


def test_window_vector_validation():
    series = bin_events(_trace([(0.5, "NtReadFile")]))
    with pytest.raises(ValidationError):
        window_vector(series, ["NtReadFile"], 0.0, 0.0)
    with pytest.raises(ValidationError):
        window_vector(series, [], 0.0, 1.0)


def test_catalogue_load(tmp_path):
    p = tmp_path / "cat.txt"
    p.write_text("# comment\nNtReadFile\nNtWriteFile  # trailing\n\n")
    cat = FileApiCatalogue.load(p)
    assert cat.names == {"NtReadFile", "NtWriteFile"}
    assert "NtReadFile" in cat


def test_catalogue_rejects_empty():
    with pytest.raises(ValidationError):
        FileApiCatalogue(frozenset())


def test_default_catalogue_contents():
    assert "NtWriteFile" in DEFAULT_CATALOGUE
    assert "RegOpenKeyExW" not in DEFAULT_CATALOGUE

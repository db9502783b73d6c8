import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framelog import (
    Event,
    EventLog,
    EventSegment,
    LabelDistribution,
    Trace,
    UncertainEventLog,
    UncertainTrace,
    UncertainEvent,
    dfg_to_dot,
    discover_dfg,
    parse_log,
    project_certain,
    serialize_log,
    to_certain_trace,
    to_uncertain_trace,
    truncate_topk,
)
from framelog.errors import MissingDistribution, UnsupportedFormat
from framelog.eventlog import END_NODE, START_NODE, format_iso_ms, parse_iso


LABELS = ("bake", "mix", "rest", "wash")


def dist(*probs, labels=LABELS):
    return LabelDistribution(labels=labels[: len(probs)], probabilities=np.array(probs))


def labeled_segments():
    return [
        EventSegment(0, 50, 1, label_distribution=dist(0.7, 0.3)),
        EventSegment(50, 80, 2, label_distribution=dist(0.2, 0.8)),
        EventSegment(80, 100, 3, label_distribution=dist(0.5, 0.5)),
    ]


# --- trace building ---------------------------------------------------------

def test_certain_trace_argmax_and_timestamps():
    trace = to_certain_trace(labeled_segments(), fps=10, base_time=0.0, case_id="v1")
    assert [e.activity for e in trace.events] == ["bake", "mix", "bake"]
    assert trace.events[0].t_start == 0.0
    assert trace.events[0].t_end == pytest.approx(4.9)
    assert trace.events[1].t_start == pytest.approx(5.0)
    assert trace.events[2].t_end == pytest.approx(9.9)


def test_certain_trace_tie_breaks_ascending():
    segs = [EventSegment(0, 10, 1, label_distribution=dist(0.5, 0.5))]
    trace = to_certain_trace(segs, fps=10, base_time=0.0, case_id="v")
    assert trace.events[0].activity == "bake"


def test_missing_distribution_raises():
    segs = [EventSegment(0, 10, 1)]
    with pytest.raises(MissingDistribution):
        to_certain_trace(segs, 10, 0.0, "v")
    with pytest.raises(MissingDistribution):
        to_uncertain_trace(segs, 10, 0.0, "v")


def test_uncertain_trace_keeps_distribution_and_matches_certain():
    segs = labeled_segments()
    certain = to_certain_trace(segs, 10, 100.0, "v")
    uncertain = to_uncertain_trace(segs, 10, 100.0, "v")
    assert len(certain.events) == len(uncertain.events)
    for ce, ue in zip(certain.events, uncertain.events):
        assert ue.distribution.probabilities.sum() == pytest.approx(1.0, abs=1e-9)
        assert ce.activity == ue.argmax_activity
        assert ce.t_start == ue.t_start and ce.t_end == ue.t_end
    # intervals disjoint
    for prev, cur in zip(uncertain.events, uncertain.events[1:]):
        assert prev.t_end < cur.t_start


def test_trace_rejects_overlapping_events():
    with pytest.raises(ValueError):
        Trace("x", (Event("a", 0.0, 5.0), Event("b", 4.0, 6.0)))


def test_log_rejects_duplicate_case_ids():
    t = Trace("x", (Event("a", 0.0, 1.0),))
    with pytest.raises(ValueError):
        EventLog((t, t))


# --- top-k truncation -------------------------------------------------------

def test_truncate_topk_renormalizes():
    d = dist(0.5, 0.3, 0.1, 0.1)
    got = truncate_topk(d, 3)
    assert got.labels == ("bake", "mix", "rest")  # rest beats wash by label order
    assert np.allclose(got.probabilities, [5 / 9, 3 / 9, 1 / 9])


def test_truncate_topk_full_is_identity():
    d = dist(0.4, 0.3, 0.2, 0.1)
    got = truncate_topk(d, 4)
    assert got.labels == d.labels
    assert np.allclose(got.probabilities, d.probabilities)


def test_truncate_topk_one_hot():
    d = dist(0.0, 1.0, 0.0)
    for k in (1, 2, 3):
        got = truncate_topk(d, k)
        assert got.probability_of("mix") == 1.0


def test_truncate_keeps_the_k_largest():
    d = dist(0.05, 0.4, 0.2, 0.35)
    got = truncate_topk(d, 2)
    assert set(got.labels) == {"mix", "wash"}


# --- serialization ----------------------------------------------------------

def certain_log():
    return EventLog(
        traces=(
            to_certain_trace(labeled_segments(), 10, 1_600_000_000.0, "case_a"),
            to_certain_trace(labeled_segments()[:2], 25, 1_600_000_500.0, "case_b"),
        )
    )


def uncertain_log():
    return UncertainEventLog(
        traces=(
            to_uncertain_trace(labeled_segments(), 10, 1_600_000_000.0, "case_a"),
            to_uncertain_trace(labeled_segments()[:2], 25, 1_600_000_500.0, "case_b"),
        )
    )


def round_times(log, decimals=3):
    def fix_trace(trace):
        cls = UncertainTrace if isinstance(trace, UncertainTrace) else Trace
        events = []
        for e in trace.events:
            if isinstance(e, Event):
                events.append(Event(e.activity, round(e.t_start, decimals), round(e.t_end, decimals)))
            else:
                events.append(UncertainEvent(e.distribution, round(e.t_start, decimals), round(e.t_end, decimals)))
        return cls(trace.case_id, tuple(events))

    cls = UncertainEventLog if isinstance(log, UncertainEventLog) else EventLog
    return cls(tuple(fix_trace(t) for t in log.traces))


def test_csv_round_trip_certain():
    log = certain_log()
    parsed = parse_log(serialize_log(log, "csv"), "csv")
    assert isinstance(parsed, EventLog)
    assert parsed == round_times(log)  # csv carries millisecond timestamps


def test_csv_round_trip_uncertain():
    log = uncertain_log()
    parsed = parse_log(serialize_log(log, "csv"), "csv")
    assert isinstance(parsed, UncertainEventLog)
    assert parsed == round_times(log)


def test_csv_empty_log_header_only():
    data = serialize_log(EventLog(()), "csv")
    assert data.decode().strip() == "case_id,activity,t_start,t_end,probability"


def test_ujson_round_trip_exact():
    for log in (certain_log(), uncertain_log()):
        parsed = parse_log(serialize_log(log, "ujson"), "ujson")
        assert parsed == log  # exact floats survive JSON


def test_xes_round_trip_exact():
    log = certain_log()
    parsed = parse_log(serialize_log(log, "xes"), "xes")
    assert parsed == log


def test_xes_event_count_doubles():
    log = EventLog((to_certain_trace(labeled_segments()[:2], 10, 0.0, "c"),))
    xml = serialize_log(log, "xes").decode()
    assert xml.count("<event>") == 4  # start + complete per process event


def test_xes_rejects_uncertain():
    with pytest.raises(UnsupportedFormat):
        serialize_log(uncertain_log(), "xes")


def test_unknown_format():
    with pytest.raises(UnsupportedFormat):
        serialize_log(certain_log(), "parquet")


def test_iso_formatting_round_trip():
    t = 1_600_000_123.456
    assert parse_iso(format_iso_ms(t)) == pytest.approx(t, abs=5e-4)


# --- dfg --------------------------------------------------------------------

def mk_trace(case_id, *activities, start=0.0):
    events = []
    t = start
    for a in activities:
        events.append(Event(a, t, t + 0.5))
        t += 1.0
    return Trace(case_id, tuple(events))


def test_dfg_single_trace():
    dfg = discover_dfg(EventLog((mk_trace("c", "a", "b", "c"),)))
    assert dfg.edges[("a", "b")] == 1
    assert dfg.edges[("b", "c")] == 1
    assert dfg.edges[(START_NODE, "a")] == 1
    assert dfg.edges[("c", END_NODE)] == 1


def test_dfg_counts_accumulate_across_traces():
    log = EventLog((mk_trace("c1", "a", "b"), mk_trace("c2", "a", "b")))
    dfg = discover_dfg(log)
    assert dfg.edges[("a", "b")] == 2


def test_dfg_single_event_trace_no_internal_edges():
    dfg = discover_dfg(EventLog((mk_trace("c", "solo"),)))
    internal = [e for e in dfg.edges if START_NODE not in e and END_NODE not in e]
    assert internal == []


@given(st.lists(st.lists(st.sampled_from("abcd"), min_size=1, max_size=6), min_size=1, max_size=8))
@settings(max_examples=100)
def test_dfg_edge_conservation(trace_shapes):
    traces = tuple(mk_trace(f"case{i}", *shape) for i, shape in enumerate(trace_shapes))
    log = EventLog(traces)
    dfg = discover_dfg(log)
    assert dfg.non_artificial_total() == sum(len(t.events) - 1 for t in log.traces)


def test_dot_output_deterministic_and_labeled():
    log = EventLog((mk_trace("c", "mix", "bake"),))
    dot = dfg_to_dot(discover_dfg(log))
    assert dot == dfg_to_dot(discover_dfg(log))
    assert '"mix" -> "bake" [label="1"];' in dot
    assert dot.startswith("digraph dfg {")


# --- certain/uncertain consistency property ---------------------------------

@given(seed=st.integers(0, 10**6))
@settings(max_examples=100, deadline=None)
def test_projection_consistency(seed):
    rng = np.random.default_rng(seed)
    n_segments = int(rng.integers(1, 6))
    bounds = np.sort(rng.choice(np.arange(1, 200), size=n_segments - 1, replace=False)) if n_segments > 1 else []
    edges = [0, *bounds, 200]
    labels = tuple(sorted({f"act{i}" for i in range(int(rng.integers(2, 5)))}))
    segments = []
    for s, e in zip(edges, edges[1:]):
        p = rng.dirichlet(np.ones(len(labels)))
        segments.append(EventSegment(int(s), int(e), 1, label_distribution=LabelDistribution(labels, p)))
    certain = to_certain_trace(segments, 30, 50.0, "v")
    uncertain = to_uncertain_trace(segments, 30, 50.0, "v")
    projected = project_certain(UncertainEventLog((uncertain,)))
    assert projected.traces[0] == certain

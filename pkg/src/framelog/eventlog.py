"""Event log abstraction: certain and uncertain logs built from labeled
segments, serialization (csv / xes / ujson), and directly-follows graphs.

Timestamps are UTC epoch seconds as floats. The frame-to-time map is
t(f) = base_time + f/fps; an event ends at the timestamp of its last frame
(end_frame - 1), so consecutive events stay one frame period apart and
traces are totally ordered with disjoint intervals.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from xml.etree import ElementTree as ET

from .embeddings import as_fps
from .errors import MissingDistribution, UnsupportedFormat
from .fewshot import LabelDistribution
from .segmentation import EventSegment

UNCERTAINTY_TYPE = "[A]_W"  # probabilistic labels, certain totally ordered times
START_NODE = "__start__"
END_NODE = "__end__"


@dataclass(frozen=True)
class Event:
    activity: str
    t_start: float
    t_end: float

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValueError("event ends before it starts")


@dataclass(frozen=True)
class UncertainEvent:
    distribution: LabelDistribution
    t_start: float
    t_end: float

    def __post_init__(self):
        if self.t_start > self.t_end:
            raise ValueError("event ends before it starts")

    @property
    def argmax_activity(self) -> str:
        return self.distribution.argmax_label()


def _check_ordered(events) -> None:
    for prev, cur in zip(events, events[1:]):
        if not prev.t_end < cur.t_start:
            raise ValueError("trace events must be chronological with disjoint intervals")


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[Event, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        _check_ordered(self.events)


@dataclass(frozen=True)
class UncertainTrace:
    case_id: str
    events: tuple[UncertainEvent, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        _check_ordered(self.events)


def _check_unique_cases(traces) -> None:
    ids = [t.case_id for t in traces]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate case_id in log")


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...]

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        _check_unique_cases(self.traces)


@dataclass(frozen=True)
class UncertainEventLog:
    traces: tuple[UncertainTrace, ...]

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        _check_unique_cases(self.traces)


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    """Activity nodes plus artificial start/end, with edge counts."""

    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], int]

    def non_artificial_total(self) -> int:
        return sum(
            c for (a, b), c in self.edges.items() if a != START_NODE and b != END_NODE
        )


def _segment_times(seg: EventSegment, fps: Fraction, base_time: float) -> tuple[float, float]:
    t_start = base_time + float(Fraction(seg.start_frame) / fps)
    t_end = base_time + float(Fraction(seg.end_frame - 1) / fps)
    return t_start, t_end


def _checked_segments(segments) -> list[EventSegment]:
    segs = sorted(segments, key=lambda s: s.start_frame)
    if not segs:
        raise ValueError("no segments")
    for seg in segs:
        if seg.label_distribution is None:
            raise MissingDistribution(
                f"segment [{seg.start_frame}, {seg.end_frame}) carries no label distribution"
            )
    for prev, cur in zip(segs, segs[1:]):
        if prev.end_frame != cur.start_frame:
            raise ValueError("segments must partition the frame range")
    return segs


def to_certain_trace(segments, fps, base_time: float, case_id: str) -> Trace:
    """Maximum-likelihood trace: one event per segment, activity = argmax
    of its distribution (ties to the ascending label)."""
    fps = as_fps(fps)
    events = []
    for seg in _checked_segments(segments):
        t_start, t_end = _segment_times(seg, fps, base_time)
        events.append(Event(seg.label_distribution.argmax_label(), t_start, t_end))
    return Trace(case_id=case_id, events=tuple(events))


def to_uncertain_trace(segments, fps, base_time: float, case_id: str) -> UncertainTrace:
    """Trace retaining the full label distribution per event."""
    fps = as_fps(fps)
    events = []
    for seg in _checked_segments(segments):
        t_start, t_end = _segment_times(seg, fps, base_time)
        events.append(UncertainEvent(seg.label_distribution, t_start, t_end))
    return UncertainTrace(case_id=case_id, events=tuple(events))


def project_certain(log: UncertainEventLog) -> EventLog:
    """Argmax projection of an uncertain log."""
    return EventLog(
        traces=tuple(
            Trace(t.case_id, tuple(Event(e.argmax_activity, e.t_start, e.t_end) for e in t.events))
            for t in log.traces
        )
    )


def truncate_topk(dist: LabelDistribution, k: int) -> LabelDistribution:
    """Keep the k most probable labels (ties to ascending label order) and
    renormalize by the retained mass."""
    if k < 1 or k > len(dist.labels):
        raise ValueError(f"k={k} outside 1..{len(dist.labels)}")
    keep = set(dist.ranked_labels()[:k])
    labels = tuple(l for l in dist.labels if l in keep)
    probs = [dist.probability_of(l) for l in labels]
    mass = sum(probs)
    return LabelDistribution(labels=labels, probabilities=[p / mass for p in probs])


def truncate_log_topk(log: UncertainEventLog, k: int) -> UncertainEventLog:
    return UncertainEventLog(
        traces=tuple(
            UncertainTrace(
                t.case_id,
                tuple(
                    UncertainEvent(truncate_topk(e.distribution, min(k, len(e.distribution.labels))), e.t_start, e.t_end)
                    for e in t.events
                ),
            )
            for t in log.traces
        )
    )


# --- timestamp formatting -------------------------------------------------

def format_iso_ms(t: float) -> str:
    total_ms = round(t * 1000.0)
    secs, ms = divmod(int(total_ms), 1000)
    dt = datetime.fromtimestamp(secs, tz=timezone.utc)
    return f"{dt.strftime('%Y-%m-%dT%H:%M:%S')}.{ms:03d}Z"


def format_iso_us(t: float) -> str:
    total_us = round(t * 1_000_000.0)
    secs, us = divmod(int(total_us), 1_000_000)
    dt = datetime.fromtimestamp(secs, tz=timezone.utc)
    return f"{dt.strftime('%Y-%m-%dT%H:%M:%S')}.{us:06d}Z"


def parse_iso(text: str) -> float:
    return datetime.fromisoformat(text.replace("Z", "+00:00")).timestamp()


# --- serialization --------------------------------------------------------

CSV_COLUMNS = ["case_id", "activity", "t_start", "t_end", "probability"]


def _csv_bytes(log) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for trace in log.traces:
        for event in trace.events:
            start = format_iso_ms(event.t_start)
            end = format_iso_ms(event.t_end)
            if isinstance(event, Event):
                writer.writerow([trace.case_id, event.activity, start, end, "1.0"])
            else:
                dist = event.distribution
                for label, p in zip(dist.labels, dist.probabilities):
                    writer.writerow([trace.case_id, label, start, end, repr(float(p))])
    return buf.getvalue().encode("utf-8")


def _csv_parse(data: bytes, uncertain: bool | None):
    rows = list(csv.reader(io.StringIO(data.decode("utf-8"))))
    if not rows or rows[0] != CSV_COLUMNS:
        raise UnsupportedFormat("not a framelog csv: bad header row")
    body = rows[1:]
    # group rows into events by (case, t_start, t_end) runs
    grouped: dict[str, list[list[tuple[str, float]]]] = {}
    order: list[str] = []
    last_key = None
    for case_id, activity, t_start, t_end, prob in body:
        if case_id not in grouped:
            grouped[case_id] = []
            order.append(case_id)
        key = (case_id, t_start, t_end)
        if key != last_key:
            grouped[case_id].append([])
            last_key = key
        grouped[case_id][-1].append((activity, float(prob), parse_iso(t_start), parse_iso(t_end)))
    if uncertain is None:
        uncertain = any(
            len(group) > 1 or group[0][1] != 1.0
            for groups in grouped.values()
            for group in groups
        )
    traces = []
    for case_id in order:
        events = []
        for group in grouped[case_id]:
            t_start, t_end = group[0][2], group[0][3]
            if uncertain:
                labels = tuple(a for a, _, _, _ in group)
                probs = [p for _, p, _, _ in group]
                events.append(UncertainEvent(LabelDistribution(labels, probs), t_start, t_end))
            else:
                if len(group) != 1:
                    raise UnsupportedFormat("certain csv has multi-row events")
                events.append(Event(group[0][0], t_start, t_end))
        if uncertain:
            traces.append(UncertainTrace(case_id, tuple(events)))
        else:
            traces.append(Trace(case_id, tuple(events)))
    return UncertainEventLog(tuple(traces)) if uncertain else EventLog(tuple(traces))


_XES_EXTENSIONS = (
    ("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
    ("Time", "time", "http://www.xes-standard.org/time.xesext"),
    ("Lifecycle", "lifecycle", "http://www.xes-standard.org/lifecycle.xesext"),
)


def _xes_bytes(log: EventLog) -> bytes:
    root = ET.Element("log", {"xes.version": "1.0", "xes.features": ""})
    for name, prefix, uri in _XES_EXTENSIONS:
        ET.SubElement(root, "extension", {"name": name, "prefix": prefix, "uri": uri})
    for trace in log.traces:
        trace_el = ET.SubElement(root, "trace")
        ET.SubElement(trace_el, "string", {"key": "concept:name", "value": trace.case_id})
        for event in trace.events:
            # one process event = start + complete XES events; the float
            # "epoch" attribute preserves the exact timestamp bits that
            # ISO formatting would round away
            for transition, t in (("start", event.t_start), ("complete", event.t_end)):
                ev = ET.SubElement(trace_el, "event")
                ET.SubElement(ev, "string", {"key": "concept:name", "value": event.activity})
                ET.SubElement(ev, "string", {"key": "lifecycle:transition", "value": transition})
                ET.SubElement(ev, "date", {"key": "time:timestamp", "value": format_iso_us(t)})
                ET.SubElement(ev, "float", {"key": "epoch", "value": repr(float(t))})
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _xes_attr(event_el, key):
    for child in event_el:
        if child.attrib.get("key") == key:
            return child.attrib["value"]
    return None


def _xes_parse(data: bytes) -> EventLog:
    root = ET.fromstring(data)
    traces = []
    for trace_el in root.iter("trace"):
        case_id = None
        for child in trace_el:
            if child.tag == "string" and child.attrib.get("key") == "concept:name":
                case_id = child.attrib["value"]
                break
        events = []
        pending = None
        for ev in trace_el.iter("event"):
            activity = _xes_attr(ev, "concept:name")
            transition = _xes_attr(ev, "lifecycle:transition")
            epoch = _xes_attr(ev, "epoch")
            t = float(epoch) if epoch is not None else parse_iso(_xes_attr(ev, "time:timestamp"))
            if transition == "start":
                if pending is not None:
                    raise UnsupportedFormat("xes: start event while another is open")
                pending = (activity, t)
            elif transition == "complete":
                if pending is None or pending[0] != activity:
                    raise UnsupportedFormat("xes: complete event does not match open start")
                events.append(Event(activity, pending[1], t))
                pending = None
        if pending is not None:
            raise UnsupportedFormat("xes: unterminated start event")
        traces.append(Trace(case_id, tuple(events)))
    return EventLog(tuple(traces))


def _ujson_bytes(log) -> bytes:
    uncertain = isinstance(log, UncertainEventLog)
    traces = []
    for trace in log.traces:
        events = []
        for event in trace.events:
            if uncertain:
                dist = {l: float(p) for l, p in zip(event.distribution.labels, event.distribution.probabilities)}
            else:
                dist = {event.activity: 1.0}
            events.append({"distribution": dist, "t_start": event.t_start, "t_end": event.t_end})
        traces.append({"case_id": trace.case_id, "events": events})
    doc = {
        "meta": {"uncertainty_type": UNCERTAINTY_TYPE, "kind": "uncertain" if uncertain else "certain"},
        "traces": traces,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _ujson_parse(data: bytes, uncertain: bool | None):
    doc = json.loads(data.decode("utf-8"))
    if uncertain is None:
        uncertain = doc.get("meta", {}).get("kind", "uncertain") == "uncertain"
    traces = []
    for t in doc["traces"]:
        events = []
        for e in t["events"]:
            dist = e["distribution"]
            if uncertain:
                labels = tuple(dist.keys())
                probs = [dist[l] for l in labels]
                events.append(UncertainEvent(LabelDistribution(labels, probs), e["t_start"], e["t_end"]))
            else:
                (activity,) = dist.keys()
                events.append(Event(activity, e["t_start"], e["t_end"]))
        if uncertain:
            traces.append(UncertainTrace(t["case_id"], tuple(events)))
        else:
            traces.append(Trace(t["case_id"], tuple(events)))
    return UncertainEventLog(tuple(traces)) if uncertain else EventLog(tuple(traces))


def serialize_log(log, fmt: str) -> bytes:
    """Serialize a log; csv and ujson take both kinds, xes only certain."""
    if fmt == "csv":
        return _csv_bytes(log)
    if fmt == "ujson":
        return _ujson_bytes(log)
    if fmt == "xes":
        if isinstance(log, UncertainEventLog):
            raise UnsupportedFormat("plain xes cannot carry label distributions; use ujson")
        return _xes_bytes(log)
    raise UnsupportedFormat(f"unknown format {fmt!r}")


def parse_log(data: bytes, fmt: str, uncertain: bool | None = None):
    """Inverse of serialize_log. ``uncertain`` forces the log kind where
    the bytes alone are ambiguous (csv of one-hot distributions)."""
    if fmt == "csv":
        return _csv_parse(data, uncertain)
    if fmt == "ujson":
        return _ujson_parse(data, uncertain)
    if fmt == "xes":
        return _xes_parse(data)
    raise UnsupportedFormat(f"unknown format {fmt!r}")


# --- process discovery ----------------------------------------------------

def discover_dfg(log: EventLog) -> DirectlyFollowsGraph:
    """Directly-follows counts over adjacent event pairs, plus artificial
    start/end edges per trace."""
    edges: dict[tuple[str, str], int] = {}
    activities = set()
    for trace in log.traces:
        acts = [e.activity for e in trace.events]
        activities.update(acts)
        if not acts:
            continue
        path = [START_NODE] + acts + [END_NODE]
        for a, b in zip(path, path[1:]):
            edges[(a, b)] = edges.get((a, b), 0) + 1
    nodes = tuple(sorted(activities)) + (START_NODE, END_NODE)
    return DirectlyFollowsGraph(nodes=nodes, edges=edges)


def _dot_quote(name: str) -> str:
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def dfg_to_dot(dfg: DirectlyFollowsGraph) -> str:
    lines = ["digraph dfg {", "  rankdir=LR;"]
    lines.append(f'  {_dot_quote(START_NODE)} [label="start", shape=circle];')
    lines.append(f'  {_dot_quote(END_NODE)} [label="end", shape=doublecircle];')
    for node in sorted(n for n in dfg.nodes if n not in (START_NODE, END_NODE)):
        lines.append(f"  {_dot_quote(node)} [shape=box];")
    for (a, b), count in sorted(dfg.edges.items()):
        lines.append(f'  {_dot_quote(a)} -> {_dot_quote(b)} [label="{count}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"

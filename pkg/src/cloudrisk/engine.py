"""Deterministic discrete-event engine with an information-flow reference monitor.

Every transmission between nodes passes through the monitor: the source's
requested declassifications are applied first, then the effective label must
flow into the destination's label. Accepted messages are delivered in the
same tick; rejected sends are logged and deliver nothing.

Replay contract: identical (scenario, workload, seed) inputs produce a
byte-identical serialized trace. All time is integer ticks, all tie-breaking
is by a fixed per-kind priority then by creation order, and no wall-clock or
platform-dependent value enters the event loop.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

from .errors import CapabilityError, FlowDenied, ParseError
from .labels import (
    CapabilitySet,
    Label,
    can_flow,
    declassify,
    implied_timing,
    join,
)

# Fixed execution order for same-tick events; creation order breaks ties.
EVENT_KINDS = ("PacerRelease", "SchedulerDecision", "Deliver", "JobStart", "JobComplete", "Send")
PRIORITY = {kind: i for i, kind in enumerate(EVENT_KINDS)}


@dataclass(frozen=True)
class SimEvent:
    """One timestamped trace record with a label snapshot."""

    tick: int
    seq: int
    kind: str
    src: str
    dst: str
    payload: str
    label: str
    detail: str = ""

    def to_json(self) -> str:
        # fixed field order, compact separators: the serialized line is the
        # unit of golden-trace comparison
        return json.dumps(
            {
                "tick": self.tick,
                "seq": self.seq,
                "kind": self.kind,
                "src": self.src,
                "dst": self.dst,
                "payload": self.payload,
                "label": self.label,
                "detail": self.detail,
            },
            separators=(",", ":"),
        )

    @staticmethod
    def from_json(line: str, lineno: int) -> "SimEvent":
        try:
            raw = json.loads(line)
            return SimEvent(
                tick=raw["tick"], seq=raw["seq"], kind=raw["kind"], src=raw["src"],
                dst=raw["dst"], payload=raw["payload"], label=raw["label"],
                detail=raw.get("detail", ""),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad trace event: {exc}", line=lineno) from None


@dataclass
class Trace:
    """An ordered event log plus the immutable setup it ran under.

    The header (scenario id, seed, node clearances) plus the event list is
    everything needed to re-check every monitor decision offline.
    """

    scenario_id: str
    seed: int
    nodes: dict
    events: list

    def header_json(self) -> str:
        return json.dumps(
            {
                "scenario": self.scenario_id,
                "seed": self.seed,
                "nodes": {k: self.nodes[k] for k in sorted(self.nodes)},
            },
            separators=(",", ":"),
        )

    def serialize(self) -> str:
        lines = [self.header_json()]
        lines.extend(ev.to_json() for ev in self.events)
        return "\n".join(lines) + "\n"

    @staticmethod
    def parse(text: str) -> "Trace":
        lines = text.splitlines()
        if not lines:
            raise ParseError("empty trace", line=1)
        try:
            head = json.loads(lines[0])
            scenario_id = head["scenario"]
            seed = head["seed"]
            nodes = head["nodes"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"bad trace header: {exc}", line=1) from None
        events = [SimEvent.from_json(line, i + 2) for i, line in enumerate(lines[1:]) if line]
        return Trace(scenario_id, seed, nodes, events)

    def project(self, observer: str) -> "Trace":
        """Restrict to what the observer sees at its own gateway boundary:
        deliveries to its endpoint, ticks preserved, sequence renumbered."""
        sink = endpoint_id(observer)
        kept = [ev for ev in self.events if ev.kind == "Deliver" and ev.dst == sink]
        renumbered = [
            SimEvent(ev.tick, i, ev.kind, ev.src, ev.dst, ev.payload, ev.label, ev.detail)
            for i, ev in enumerate(kept)
        ]
        return Trace(self.scenario_id, self.seed, dict(self.nodes), renumbered)

    def deliveries_to(self, node_id: str):
        return [ev for ev in self.events if ev.kind == "Deliver" and ev.dst == node_id]


def endpoint_id(principal: str) -> str:
    return f"ext:{principal}"


def gateway_id(principal: str) -> str:
    return f"gw:{principal}"


def pacer_id(principal: str) -> str:
    return f"pacer:{principal}"


@dataclass
class Process:
    """A labeled simulated process.

    Deterministic processes cannot observe time: their behavior is a pure
    function of explicit message content and internal state, enforced by
    construction (the engine never passes them the clock or scheduler state).
    Their timing label may therefore exceed their content label. A
    non-deterministic process absorbs the timing principals of everything it
    receives into its content label.
    """

    id: str
    label: Label
    deterministic: bool = True
    caps: CapabilitySet = field(default_factory=CapabilitySet)

    @property
    def content_label(self) -> Label:
        return self.label.content_view()

    @property
    def timing_label(self) -> Label:
        return self.label.timing_view()


def receive_taint(process: Process, msg_label: Label) -> Label:
    """Taint a process with a delivered message's label and return the new
    process label. Content joins content, timing joins timing; if the process
    is not deterministic its content also absorbs the message's timing
    principals, because timing observations can steer its state.
    """
    new = join(process.label, msg_label)
    if not process.deterministic:
        new = join(new, Label(content=[p for p, _ in msg_label.timing]))
    process.label = implied_timing(new)
    return process.label


@dataclass
class LabeledMessage:
    payload: str
    label: Label
    src: str
    dst: str
    enqueue_tick: int = 0
    release_tick: int = 0

    @property
    def content_label(self) -> Label:
        return self.label.content_view()

    @property
    def timing_label(self) -> Label:
        return self.label.timing_view()


@dataclass
class SendResult:
    accepted: bool
    reason: str = ""
    error: Exception | None = None


class Engine:
    """Sequential event loop, confined to one execution context.

    Nodes are registered with either a fixed clearance label (trusted
    infrastructure: gateways, cores, pacers, endpoints) or a Process whose
    label evolves by taint propagation (jobs, schedulers). Handlers receive
    the engine plus the delivered message and may send further messages or
    schedule future work.
    """

    def __init__(self, scenario_id: str, seed: int, horizon: int):
        self.scenario_id = scenario_id
        self.seed = seed
        self.horizon = horizon
        self.now = 0
        self.events: list[SimEvent] = []
        self.clearances: dict[str, Label] = {}
        self.processes: dict[str, Process] = {}
        self.handlers: dict[str, object] = {}
        self.caps: dict[str, CapabilitySet] = {}
        self._heap: list = []
        self._push_seq = 0
        self._trace_seq = 0

    # -- setup ------------------------------------------------------------

    def add_node(self, node_id: str, label: Label, handler=None,
                 caps: CapabilitySet | None = None, process: Process | None = None):
        if node_id in self.handlers:
            raise ValueError(f"duplicate node id {node_id!r}")
        if process is not None:
            self.processes[node_id] = process
        else:
            self.clearances[node_id] = label
        self.handlers[node_id] = handler
        self.caps[node_id] = caps or CapabilitySet()

    def register_job_process(self, process: Process):
        """Jobs appear at runtime; they are monitor subjects but never
        message destinations."""
        self.processes[process.id] = process
        self.handlers[process.id] = None
        self.caps[process.id] = CapabilitySet()

    def label_of(self, node_id: str) -> Label:
        if node_id in self.processes:
            return self.processes[node_id].label
        return self.clearances[node_id]

    # -- event loop -------------------------------------------------------

    def schedule(self, tick: int, kind: str, fn, *args) -> None:
        if tick < self.now:
            raise ValueError("cannot schedule into the past")
        self._push_seq += 1
        heapq.heappush(self._heap, (tick, PRIORITY[kind], self._push_seq, fn, args))

    def record(self, kind: str, src: str, dst: str, payload: str,
               label: Label, detail: str = "") -> SimEvent:
        ev = SimEvent(self.now, self._trace_seq, kind, src, dst, payload, label.text, detail)
        self._trace_seq += 1
        self.events.append(ev)
        return ev

    def run_loop(self) -> None:
        while self._heap:
            tick, _prio, _seq, fn, args = heapq.heappop(self._heap)
            if tick > self.horizon:
                break
            self.now = tick
            fn(*args)

    def trace(self) -> Trace:
        nodes = {nid: lbl.text for nid, lbl in self.clearances.items()}
        for nid, proc in self.processes.items():
            if not nid.startswith("job:"):
                nodes[nid] = proc.label.text
        return Trace(self.scenario_id, self.seed, nodes, list(self.events))

    # -- the reference monitor --------------------------------------------

    def send(self, src_id: str, dst_id: str, payload: str, label: Label,
             drops=(), detail: str = "") -> SendResult:
        """Monitor-checked transmission.

        The source's held capabilities are applied to the requested drops,
        then the effective label must flow into the destination's label.
        Accepted messages are delivered within the same tick; a rejected send
        logs the denial and delivers nothing.
        """
        caps = self.caps.get(src_id, CapabilitySet())
        try:
            effective = declassify(label, caps, drops)
        except CapabilityError as err:
            self.record("Send", src_id, dst_id, payload, label, f"rejected: {err}")
            return SendResult(False, str(err), err)
        dst_label = self.label_of(dst_id)
        if not can_flow(effective, dst_label):
            err = FlowDenied(
                missing_content=effective.content - dst_label.content,
                underrated_timing=[
                    p for p, f in effective.timing
                    if (g := dst_label.timing_rate(p)) is None or g < f
                ],
            )
            self.record("Send", src_id, dst_id, payload, effective, f"rejected: {err}")
            return SendResult(False, str(err), err)
        self.record("Send", src_id, dst_id, payload, effective)
        msg = LabeledMessage(payload, effective, src_id, dst_id,
                             enqueue_tick=self.now, release_tick=self.now)
        self.schedule(self.now, "Deliver", self._deliver, msg)
        return SendResult(True)

    def _deliver(self, msg: LabeledMessage) -> None:
        msg.release_tick = self.now
        self.record("Deliver", msg.src, msg.dst, msg.payload, msg.label)
        proc = self.processes.get(msg.dst)
        if proc is not None:
            receive_taint(proc, msg.label)
        handler = self.handlers.get(msg.dst)
        if handler is not None:
            handler.on_deliver(self, msg)

"""The three cloud-scheduling scenarios and the timing-leak experiment.

Two customers (conventionally A and B, any number is supported) submit
compute jobs through per-customer gateways:

* ``dedicated``  — fixed hardware partitioning, one or more private cores per
  customer. No cross-customer taint ever arises.
* ``reservation`` — one shared core driven by an empty-labeled scheduler on a
  fixed repeating timeslice pattern. The scheduler can influence everyone's
  timing without adding taint, and can receive nothing back.
* ``statmux``    — demand-driven scheduling by a fully tainted scheduler.
  Results come out carrying every customer's unbounded timing taint and must
  pass a per-customer pacer plus rate-bounded gateway declassification to get
  back to their owner.

Builders validate configs; ``run`` wires the nodes and executes the event
loop; ``estimate_leak_rate`` runs an encoder/decoder adversary over many
trials and reports empirical mutual information against the pacer bound.
"""

from __future__ import annotations

import json
import math
import random
from collections import Counter, deque
from dataclasses import dataclass, field

from .engine import (
    Engine,
    LabeledMessage,
    Process,
    Trace,
    endpoint_id,
    gateway_id,
    pacer_id,
    receive_taint,
)
from .errors import ConfigError, StatError
from .labels import (
    CONTENT,
    TIMING,
    Capability,
    CapabilitySet,
    Label,
    Rate,
    implied_timing,
)
from .pacing import TICKS_PER_SECOND, PacedQueue, channel_capacity_bound

DEDICATED = "dedicated"
RESERVATION = "reservation"
STATMUX = "statmux"
KINDS = (DEDICATED, RESERVATION, STATMUX)

SHARED_CORE = "core:shared"
SCHEDULER = "sched"


def principal_label(principal: str) -> Label:
    """The label a gateway attaches to its customer's submissions."""
    return Label(content=[principal], timing={principal: Rate.infinite()})


def top_label(principals) -> Label:
    return Label(content=principals, timing={p: Rate.infinite() for p in principals})


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------

@dataclass
class ScenarioConfig:
    id: str
    kind: str
    principals: tuple
    horizon: int
    cores: dict = field(default_factory=dict)          # dedicated: principal -> core count
    timeslice_ticks: int = 0                           # reservation
    slice_pattern: tuple = ()                          # reservation: repeating owners
    pacer_rate: Rate | None = None                     # statmux
    pacer_phase: int = 0
    pacer_queue_id: str = "pacer"                      # queue id prefix in configs/errors
    omit_pacer: bool = False                           # misconfig fixture: agreement without pacer
    capability_overrides: dict = field(default_factory=dict)  # node id -> [Capability]

    KNOWN_KEYS = frozenset({
        "id", "kind", "principals", "horizon_ticks", "cores",
        "timeslice_ticks", "slice_pattern", "pacer", "omit_pacer", "capabilities",
    })

    @staticmethod
    def from_dict(raw: dict) -> "ScenarioConfig":
        unknown = set(raw) - ScenarioConfig.KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown scenario config keys: {sorted(unknown)}")
        try:
            kind = raw["kind"]
            principals = tuple(sorted(raw["principals"]))
            horizon = int(raw["horizon_ticks"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"scenario config missing/invalid field: {exc}") from None
        if kind not in KINDS:
            raise ConfigError(f"unknown scenario kind {kind!r}")
        if len(principals) != len(set(principals)) or not principals:
            raise ConfigError("principals must be a non-empty set")
        if horizon <= 0:
            raise ConfigError("horizon_ticks must be positive")
        overrides = {}
        for node, caps in raw.get("capabilities", {}).items():
            overrides[node] = [Capability.parse(c) for c in caps]
        pacer = raw.get("pacer")
        if pacer is not None and set(pacer) - {"rate", "phase_ticks", "queue_id"}:
            raise ConfigError("pacer config accepts keys rate, phase_ticks, queue_id")
        cfg = ScenarioConfig(
            id=raw.get("id", kind),
            kind=kind,
            principals=principals,
            horizon=horizon,
            cores={p: int(n) for p, n in raw.get("cores", {}).items()},
            timeslice_ticks=int(raw.get("timeslice_ticks", 0)),
            slice_pattern=tuple(raw.get("slice_pattern", ())),
            pacer_rate=Rate.parse(pacer["rate"]) if pacer else None,
            pacer_phase=int(pacer.get("phase_ticks", 0)) if pacer else 0,
            pacer_queue_id=str(pacer.get("queue_id", "pacer")) if pacer else "pacer",
            omit_pacer=bool(raw.get("omit_pacer", False)),
            capability_overrides=overrides,
        )
        return cfg

    @staticmethod
    def from_file(path) -> "ScenarioConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return ScenarioConfig.from_dict(json.load(fh))


@dataclass
class JobSpec:
    submit_tick: int
    demand_ticks: int
    payload: str
    hint: str = ""


@dataclass
class Workload:
    jobs: dict  # principal -> [JobSpec]

    @staticmethod
    def from_dict(raw: dict) -> "Workload":
        unknown = set(raw) - {"jobs"}
        if unknown:
            raise ConfigError(f"unknown workload keys: {sorted(unknown)}")
        jobs = {}
        for principal, specs in raw.get("jobs", {}).items():
            out = []
            for i, spec in enumerate(specs):
                bad = set(spec) - {"submit_tick", "demand_ticks", "payload", "hint"}
                if bad:
                    raise ConfigError(f"unknown job keys for {principal}: {sorted(bad)}")
                out.append(JobSpec(
                    submit_tick=int(spec["submit_tick"]),
                    demand_ticks=int(spec["demand_ticks"]),
                    payload=str(spec.get("payload", f"{principal}{i}")),
                    hint=str(spec.get("hint", "")),
                ))
            jobs[principal] = out
        return Workload(jobs)

    @staticmethod
    def from_file(path) -> "Workload":
        with open(path, "r", encoding="utf-8") as fh:
            return Workload.from_dict(json.load(fh))

    def validate(self, cfg: ScenarioConfig) -> None:
        for principal, specs in self.jobs.items():
            if principal not in cfg.principals:
                raise ConfigError(f"workload names unknown principal {principal!r}")
            last = -1
            for spec in specs:
                if spec.submit_tick < 0 or spec.submit_tick < last:
                    raise ConfigError(f"submit ticks must be non-decreasing for {principal}")
                if spec.demand_ticks < 1:
                    raise ConfigError("service demand must be at least one tick")
                last = spec.submit_tick


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    """A validated scenario ready to run against workloads."""

    cfg: ScenarioConfig


def build_dedicated(cfg: ScenarioConfig) -> Scenario:
    if cfg.kind != DEDICATED:
        raise ConfigError(f"expected dedicated config, got {cfg.kind!r}")
    for p in cfg.principals:
        if cfg.cores.get(p, 1) < 1:
            raise ConfigError(f"dedicated scenario needs at least one private core for {p}")
    unknown = set(cfg.cores) - set(cfg.principals)
    if unknown:
        raise ConfigError(f"cores assigned to unknown principals {sorted(unknown)}")
    return Scenario(cfg)


def build_reservation(cfg: ScenarioConfig) -> Scenario:
    if cfg.kind != RESERVATION:
        raise ConfigError(f"expected reservation config, got {cfg.kind!r}")
    if cfg.timeslice_ticks < 1:
        raise ConfigError("timeslice_ticks must be a positive tick count")
    pattern = cfg.slice_pattern or cfg.principals
    if set(pattern) != set(cfg.principals):
        raise ConfigError("slice pattern must cover exactly the scenario principals")
    if SCHEDULER in cfg.capability_overrides and cfg.capability_overrides[SCHEDULER]:
        raise ConfigError("the reservation scheduler must hold no capabilities")
    cfg.slice_pattern = tuple(pattern)
    return Scenario(cfg)


def build_statmux(cfg: ScenarioConfig) -> Scenario:
    if cfg.kind != STATMUX:
        raise ConfigError(f"expected statmux config, got {cfg.kind!r}")
    if cfg.pacer_rate is None:
        raise ConfigError("statmux needs an agreed pacer rate")
    # instantiating a queue validates rate finiteness, integral period, phase
    PacedQueue("check", cfg.pacer_rate, cfg.pacer_phase)
    return Scenario(cfg)


_BUILDERS = {DEDICATED: build_dedicated, RESERVATION: build_reservation, STATMUX: build_statmux}


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    return _BUILDERS[cfg.kind](cfg)


# ---------------------------------------------------------------------------
# Node handlers
# ---------------------------------------------------------------------------

def job_result(payload: str) -> str:
    """The deterministic job behavior: result content is a pure function of
    the input payload (and nothing else)."""
    return "r:" + payload


def _parse_submission(payload: str) -> tuple[int, str, str]:
    """Split a gateway-forwarded submission into (demand, payload, hint)."""
    demand_text, _, rest = payload.partition("|")
    body, _, hint = rest.partition("|hint=")
    return int(demand_text), body, hint


@dataclass
class Job:
    id: str
    owner: str
    payload: str
    demand: int
    remaining: int
    hint: str
    process: Process
    started: bool = False


class Endpoint:
    """Customer-side sink; deliveries here are the observable events."""

    def __init__(self, owner: str):
        self.owner = owner

    def on_deliver(self, engine: Engine, msg: LabeledMessage) -> None:
        pass


class Gateway:
    """Trusted edge node: labels inbound submissions, declassifies foreign
    timing tags on outbound results using its held capabilities."""

    def __init__(self, owner: str, inbound_route: str):
        self.owner = owner
        self.inbound_route = inbound_route

    def on_deliver(self, engine: Engine, msg: LabeledMessage) -> None:
        me = gateway_id(self.owner)
        if msg.src == endpoint_id(self.owner):
            engine.send(me, self.inbound_route, msg.payload, msg.label)
        else:
            drops = [(p, CONTENT) for p in msg.label.content if p != self.owner]
            drops += [(p, TIMING) for p, _ in msg.label.timing if p != self.owner]
            engine.send(me, endpoint_id(self.owner), msg.payload, msg.label, drops=drops)


def make_job(engine: Engine, owner: str, index: int, spec: JobSpec, label: Label) -> Job:
    process = Process(id=f"job:{owner}#{index}", label=implied_timing(label), deterministic=True)
    engine.register_job_process(process)
    return Job(process.id, owner, spec.payload, spec.demand_ticks, spec.demand_ticks,
               spec.hint, process)


class DedicatedCluster:
    """One customer's private cores: FIFO queue feeding idle cores."""

    def __init__(self, owner: str, core_count: int):
        self.owner = owner
        self.node_id = f"core:{owner}"
        self.idle = core_count
        self.pending: deque = deque()
        self._counter = 0

    def on_deliver(self, engine: Engine, msg: LabeledMessage) -> None:
        demand, payload, hint = _parse_submission(msg.payload)
        spec = JobSpec(engine.now, demand, payload, hint)
        job = make_job(engine, self.owner, self._counter, spec, msg.label)
        self._counter += 1
        if self.idle:
            self.idle -= 1
            self._start(engine, job)
        else:
            self.pending.append(job)

    def _start(self, engine: Engine, job: Job) -> None:
        job.started = True
        engine.record("JobStart", self.node_id, job.id, job.payload, job.process.label)
        engine.schedule(engine.now + job.remaining, "JobComplete", self._complete, engine, job)

    def _complete(self, engine: Engine, job: Job) -> None:
        engine.record("JobComplete", self.node_id, job.id, job.payload, job.process.label)
        engine.send(self.node_id, gateway_id(self.owner), job_result(job.payload), job.process.label)
        if self.pending:
            self._start(engine, self.pending.popleft())
        else:
            self.idle += 1


class ReservationScheduler:
    """Emits one run directive per timeslice on a fixed repeating pattern,
    forever, regardless of demand. Its label is empty, so its directives
    carry no taint, and nothing tainted can ever flow back to it."""

    def __init__(self, process: Process, pattern, timeslice: int):
        self.process = process
        self.pattern = tuple(pattern)
        self.timeslice = timeslice

    def start(self, engine: Engine) -> None:
        engine.schedule(0, "SchedulerDecision", self._wake, engine, 0)

    def _wake(self, engine: Engine, k: int) -> None:
        owner = self.pattern[k % len(self.pattern)]
        payload = f"run:{owner}"
        engine.record("SchedulerDecision", SCHEDULER, SHARED_CORE, payload, self.process.label)
        engine.send(SCHEDULER, SHARED_CORE, payload, self.process.label)
        engine.schedule(engine.now + self.timeslice, "SchedulerDecision", self._wake, engine, k + 1)

    def on_deliver(self, engine: Engine, msg: LabeledMessage) -> None:
        pass


class SharedCoreReservation:
    """Shared core with per-customer isolated job state. Which customer runs
    is dictated solely by the scheduler's directives; an idle slice stays
    idle when its owner has no queued work. Sends nothing to the scheduler."""

    def __init__(self, principals):
        self.queues = {p: deque() for p in principals}
        self.counters = {p: 0 for p in principals}
        self.active: str | None = None
        self.running: tuple | None = None  # (job, burst_start_tick)
        self.generation = 0
        self.directive_taint = Label()  # stays empty: directives carry {-/-}

    def on_deliver(self, engine: Engine, msg: LabeledMessage) -> None:
        if msg.src == SCHEDULER:
            self._switch(engine, msg.payload.split(":", 1)[1], msg.label)
        else:
            owner = min(msg.label.content)
            demand, payload, hint = _parse_submission(msg.payload)
            spec = JobSpec(engine.now, demand, payload, hint)
            job = make_job(engine, owner, self.counters[owner], spec, msg.label)
            self.counters[owner] += 1
            self.queues[owner].append(job)
            if self.active == owner and self.running is None:
                self._dispatch(engine)

    def _switch(self, engine: Engine, owner: str, directive_label: Label) -> None:
        if self.running is not None:
            job, burst_start = self.running
            job.remaining -= engine.now - burst_start
            self.generation += 1
            self.running = None
            if job.remaining <= 0:
                self._finish(engine, job)
            else:
                self.queues[job.owner].appendleft(job)
        self.active = owner
        self.directive_taint = directive_label
        self._dispatch(engine)

    def _dispatch(self, engine: Engine) -> None:
        queue = self.queues.get(self.active)
        if self.running is not None or not queue:
            return
        job = queue.popleft()
        receive_taint(job.process, Label(timing=implied_timing(self.directive_taint).timing))
        if not job.started:
            job.started = True
            engine.record("JobStart", SHARED_CORE, job.id, job.payload, job.process.label)
        self.running = (job, engine.now)
        self.generation += 1
        engine.schedule(engine.now + job.remaining, "JobComplete",
                        self._complete, engine, job, self.generation)

    def _complete(self, engine: Engine, job: Job, generation: int) -> None:
        if generation != self.generation or self.running is None or self.running[0] is not job:
            return
        self.running = None
        job.remaining = 0
        self._finish(engine, job)
        self._dispatch(engine)

    def _finish(self, engine: Engine, job: Job) -> None:
        engine.record("JobComplete", SHARED_CORE, job.id, job.payload, job.process.label)
        engine.send(SHARED_CORE, gateway_id(job.owner), job_result(job.payload), job.process.label)


class StatmuxScheduler:
    """Demand-sensitive scheduler. It sees arrival/completion notifications
    (and explicit hints from jobs), so it carries every customer's content
    and timing taint; in exchange it may steer the shared core freely.

    Policy: shortest remaining demand among the head job of each customer's
    queue, round-robin tie-break. Customers are served FIFO internally so a
    customer's own results always come back in submission order.
    """

    def __init__(self, process: Process, principals):
        self.process = process
        self.principals = tuple(principals)
        self.queues = {p: deque() for p in principals}
        self.core_busy = False
        self.rr = 0

    def on_deliver(self, engine: Engine, msg: LabeledMessage) -> None:
        parts = msg.payload.split("|")
        if parts[0] == "arrival":
            _, owner, job_id, demand = parts
            self.queues[owner].append((job_id, int(demand)))
        elif parts[0] == "done":
            self.core_busy = False
        elif parts[0] == "hint":
            return  # hints could inform the policy; logging them suffices here
        self._maybe_dispatch(engine)

    def _maybe_dispatch(self, engine: Engine) -> None:
        if self.core_busy:
            return
        n = len(self.principals)
        best = None
        for i in range(n):
            p = self.principals[(self.rr + i) % n]
            if self.queues[p]:
                demand = self.queues[p][0][1]
                if best is None or demand < best[0]:
                    best = (demand, (self.rr + i) % n, p)
        if best is None:
            return
        _, index, owner = best
        self.rr = (index + 1) % n
        job_id, _ = self.queues[owner].popleft()
        payload = f"run|{owner}|{job_id}"
        engine.record("SchedulerDecision", SCHEDULER, SHARED_CORE, payload, self.process.label)
        engine.send(SCHEDULER, SHARED_CORE, payload, self.process.label)
        self.core_busy = True


class SharedCoreStatmux:
    """Shared core under demand-driven control. Jobs run deterministically,
    so directives taint each job's timing label, never its content; results
    leave carrying the job's content plus everyone's timing taint."""

    def __init__(self, principals, result_route):
        self.result_route = dict(result_route)  # owner -> pacer or gateway node
        self.counters = {p: 0 for p in principals}
        self.jobs: dict[str, Job] = {}

    def on_deliver(self, engine: Engine, msg: LabeledMessage) -> None:
        if msg.src == SCHEDULER:
            _, owner, job_id = msg.payload.split("|")
            job = self.jobs[job_id]
            receive_taint(job.process, Label(timing=implied_timing(msg.label).timing))
            job.started = True
            engine.record("JobStart", SHARED_CORE, job.id, job.payload, job.process.label)
            engine.schedule(engine.now + job.remaining, "JobComplete", self._complete, engine, job)
        else:
            owner = min(msg.label.content)
            demand, payload, hint = _parse_submission(msg.payload)
            spec = JobSpec(engine.now, demand, payload, hint)
            job = make_job(engine, owner, self.counters[owner], spec, msg.label)
            self.counters[owner] += 1
            self.jobs[job.id] = job
            engine.send(SHARED_CORE, SCHEDULER,
                        f"arrival|{owner}|{job.id}|{job.demand}", job.process.label)
            if job.hint:
                # jobs may volunteer scheduling hints; flowing up into the
                # fully tainted scheduler is always permitted
                engine.send(job.id, SCHEDULER, f"hint|{job.hint}", job.process.label)

    def _complete(self, engine: Engine, job: Job) -> None:
        job.remaining = 0
        engine.record("JobComplete", SHARED_CORE, job.id, job.payload, job.process.label)
        engine.send(SHARED_CORE, self.result_route[job.owner],
                    job_result(job.payload), job.process.label)
        engine.send(SHARED_CORE, SCHEDULER, f"done|{job.owner}|{job.id}", job.process.label)


class PacerNode:
    """Engine wrapper around a PacedQueue on one customer's result path."""

    def __init__(self, owner: str, queue: PacedQueue):
        self.owner = owner
        self.queue = queue
        self.release_scheduled = False

    def on_deliver(self, engine: Engine, msg: LabeledMessage) -> None:
        self.queue.enqueue(msg.payload, msg.label, engine.now)
        if not self.release_scheduled:
            self.release_scheduled = True
            engine.schedule(self.queue.next_release_after(engine.now), "PacerRelease",
                            self._release, engine)

    def _release(self, engine: Engine) -> None:
        self.release_scheduled = False
        released = self.queue.on_tick(engine.now)
        if released is None:
            return
        payload, label = released
        me = pacer_id(self.owner)
        engine.record("PacerRelease", me, gateway_id(self.owner), payload, label)
        engine.send(me, gateway_id(self.owner), payload, label)
        if len(self.queue):
            self.release_scheduled = True
            engine.schedule(engine.now + self.queue.period, "PacerRelease", self._release, engine)


# ---------------------------------------------------------------------------
# Wiring and execution
# ---------------------------------------------------------------------------

def _submit(engine: Engine, principal: str, spec: JobSpec) -> None:
    payload = f"{spec.demand_ticks}|{spec.payload}"
    if spec.hint:
        payload += f"|hint={spec.hint}"
    engine.send(endpoint_id(principal), gateway_id(principal), payload,
                principal_label(principal))


def _wire(engine: Engine, cfg: ScenarioConfig) -> None:
    principals = cfg.principals
    top = top_label(principals)
    f = cfg.pacer_rate

    for p in principals:
        engine.add_node(endpoint_id(p), principal_label(p), Endpoint(p))

    if cfg.kind == DEDICATED:
        for p in principals:
            cluster = DedicatedCluster(p, cfg.cores.get(p, 1))
            engine.add_node(cluster.node_id, principal_label(p), cluster)
            engine.add_node(gateway_id(p), principal_label(p), Gateway(p, cluster.node_id))
        return

    if cfg.kind == RESERVATION:
        core = SharedCoreReservation(principals)
        engine.add_node(SHARED_CORE, top, core)
        for p in principals:
            engine.add_node(gateway_id(p), principal_label(p), Gateway(p, SHARED_CORE))
        proc = Process(SCHEDULER, Label(), deterministic=False)
        sched = ReservationScheduler(proc, cfg.slice_pattern, cfg.timeslice_ticks)
        engine.add_node(SCHEDULER, proc.label, sched, process=proc)
        sched.start(engine)
        return

    # statmux
    route = {}
    pacers = []
    for p in principals:
        if cfg.omit_pacer:
            route[p] = gateway_id(p)
        else:
            route[p] = pacer_id(p)
            queue = PacedQueue(f"{cfg.pacer_queue_id}:{p}", f, cfg.pacer_phase)
            pacers.append(PacerNode(p, queue))
    core = SharedCoreStatmux(principals, route)
    engine.add_node(SHARED_CORE, top, core)
    for pacer in pacers:
        engine.add_node(pacer_id(pacer.owner), top, pacer)
    proc = Process(SCHEDULER, top, deterministic=False)
    engine.add_node(SCHEDULER, proc.label, StatmuxScheduler(proc, principals), process=proc)
    for p in principals:
        # the mutual rate-f agreement: gateways accept foreign timing taint at
        # rate f and hold the matching timing declassifiers
        clearance = Label(
            content=[p],
            timing={p: Rate.infinite(), **{q: f for q in principals if q != p}},
        )
        default_caps = CapabilitySet([Capability(q, f) for q in principals if q != p])
        caps = cfg.capability_overrides.get(gateway_id(p))
        engine.add_node(gateway_id(p), clearance, Gateway(p, SHARED_CORE),
                        caps=CapabilitySet(caps) if caps is not None else default_caps)


def run(scenario: Scenario | ScenarioConfig, workload: Workload, seed: int) -> Trace:
    """Execute a scenario against a workload and return the trace.

    Deterministic replay: the same (scenario, workload, seed) triple always
    yields a byte-identical serialized trace. All validation happens before
    the first event.
    """
    cfg = scenario.cfg if isinstance(scenario, Scenario) else scenario
    build_scenario(cfg)
    workload.validate(cfg)
    engine = Engine(cfg.id, seed, cfg.horizon)
    _wire(engine, cfg)
    for p in cfg.principals:
        for spec in workload.jobs.get(p, []):
            engine.schedule(spec.submit_tick, "Send", _submit, engine, p, spec)
    engine.run_loop()
    return engine.trace()


# ---------------------------------------------------------------------------
# Covert-channel adversary
# ---------------------------------------------------------------------------

@dataclass
class EncoderSpec:
    """How the sender (B) modulates its workload to encode secret bits, and
    the fixed probe workload the receiver (A) submits."""

    family: str              # "demand" or "burst"
    bits: int
    params: dict

    @staticmethod
    def demand(alice_submit=1000, alice_demand=900_000,
               bob_submit=0, bob_short=200_000, bob_long=1_200_000) -> "EncoderSpec":
        """One bit per trial: B's single job is short (0) or long (1)."""
        return EncoderSpec("demand", 1, dict(
            alice_submit=alice_submit, alice_demand=alice_demand,
            bob_submit=bob_submit, bob_short=bob_short, bob_long=bob_long,
        ))

    @staticmethod
    def burst(bits=3, window_ticks=1_000_000, bob_demand=700_000,
              alice_offset=1000, alice_demand=500_000) -> "EncoderSpec":
        """k bits per trial: B submits (1) or withholds (0) a job in each of
        k consecutive windows while A probes every window."""
        return EncoderSpec("burst", bits, dict(
            window_ticks=window_ticks, bob_demand=bob_demand,
            alice_offset=alice_offset, alice_demand=alice_demand,
        ))

    def workload_for(self, secret: int) -> Workload:
        p = self.params
        if self.family == "demand":
            bob_demand = p["bob_long"] if secret else p["bob_short"]
            return Workload({
                "A": [JobSpec(p["alice_submit"], p["alice_demand"], "probe")],
                "B": [JobSpec(p["bob_submit"], bob_demand, "bob")],
            })
        if self.family == "burst":
            alice = []
            bob = []
            for j in range(self.bits):
                base = j * p["window_ticks"]
                alice.append(JobSpec(base + p["alice_offset"], p["alice_demand"], f"probe{j}"))
                if (secret >> j) & 1:
                    bob.append(JobSpec(base, p["bob_demand"], f"bob{j}"))
            return Workload({"A": alice, "B": bob})
        raise ConfigError(f"unknown encoder family {self.family!r}")


@dataclass
class LeakReport:
    scenario_id: str
    encoder_family: str
    trials: int
    seed: int
    secret_alphabet: int
    distinct_observations: int
    mi_bits_per_trial: float
    miller_madow_bias_bits: float
    periods_per_trial: int
    mi_bits_per_period: float
    trial_duration_sec: float
    leak_rate_bits_per_sec: float
    capacity_bound_bits_per_sec: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def plugin_mutual_information(pairs) -> float:
    """Plug-in mutual information, in bits, of an empirical joint sample.

    Computed from raw counts so that an observation that never varies yields
    exactly 0.0.
    """
    n = len(pairs)
    joint = Counter(pairs)
    left = Counter(x for x, _ in pairs)
    right = Counter(y for _, y in pairs)
    mi = 0.0
    for (x, y), c in sorted(joint.items()):
        mi += (c / n) * math.log2((c * n) / (left[x] * right[y]))
    # mathematically >= 0; guard the sum against stray float rounding
    return mi if mi > 0.0 else 0.0


def miller_madow_bias(pairs) -> float:
    """First-order bias of the plug-in MI estimate, in bits (reported as a
    note; it is not applied to the estimate)."""
    n = len(pairs)
    k_joint = len(set(pairs))
    k_left = len(set(x for x, _ in pairs))
    k_right = len(set(y for _, y in pairs))
    return (k_joint - k_left - k_right + 1) / (2 * n * math.log(2))


def observe(trace: Trace, observer: str) -> tuple:
    """What the observer's decoder sees: the (tick, payload) pattern of
    deliveries at its endpoint. Under a pacer all ticks lie on the release
    grid, so this is exactly the per-period release/no-release pattern."""
    projected = trace.project(observer)
    return tuple((ev.tick, ev.payload) for ev in projected.events)


def estimate_leak_rate(scenario: Scenario | ScenarioConfig, encoder: EncoderSpec,
                       trials: int, seed: int, observer: str = "A") -> LeakReport:
    """Run paired trials over uniform secrets and estimate the empirical
    leak rate toward ``observer`` in bits per second of model time."""
    if trials < 100:
        raise StatError(f"need at least 100 trials, got {trials}")
    cfg = scenario.cfg if isinstance(scenario, Scenario) else scenario
    build_scenario(cfg)
    rng = random.Random(seed)
    pairs = []
    for _ in range(trials):
        secret = rng.getrandbits(encoder.bits)
        trace = run(Scenario(cfg), encoder.workload_for(secret), seed)
        pairs.append((secret, observe(trace, observer)))
    mi = plugin_mutual_information(pairs)
    duration_sec = cfg.horizon / TICKS_PER_SECOND
    if cfg.kind == STATMUX and not cfg.omit_pacer:
        queue = PacedQueue("bound", cfg.pacer_rate, cfg.pacer_phase)
        bound = channel_capacity_bound(queue)
        periods = cfg.horizon // queue.period
    else:
        # dedicated and reservation enforce non-interference: zero capacity
        bound = 0.0
        periods = 0
    return LeakReport(
        scenario_id=cfg.id,
        encoder_family=encoder.family,
        trials=trials,
        seed=seed,
        secret_alphabet=2 ** encoder.bits,
        distinct_observations=len(set(obs for _, obs in pairs)),
        mi_bits_per_trial=mi,
        miller_madow_bias_bits=miller_madow_bias(pairs),
        periods_per_trial=periods,
        mi_bits_per_period=(mi / periods) if periods else 0.0,
        trial_duration_sec=duration_sec,
        leak_rate_bits_per_sec=mi / duration_sec,
        capacity_bound_bits_per_sec=bound,
    )

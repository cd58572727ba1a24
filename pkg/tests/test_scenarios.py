"""Scenario builders, label narratives, enforcement negatives, and the leak
estimator."""

import pytest

from cloudrisk.engine import Engine, endpoint_id, gateway_id
from cloudrisk.errors import CapabilityError, ConfigError, FlowDenied, StatError
from cloudrisk.labels import Label
from cloudrisk.pacing import TICKS_PER_SECOND
from cloudrisk.scenarios import (
    SCHEDULER,
    SHARED_CORE,
    EncoderSpec,
    Scenario,
    ScenarioConfig,
    Workload,
    _wire,
    build_dedicated,
    build_reservation,
    build_scenario,
    build_statmux,
    estimate_leak_rate,
    run,
)
from workloads import bob_variation_pair, pair_config


def cfg_from(raw):
    return ScenarioConfig.from_dict(raw)


def base(kind, **extra):
    raw = {"id": "t", "kind": kind, "principals": ["A", "B"], "horizon_ticks": 4_000_000}
    raw.update(extra)
    return raw


DED = base("dedicated")
RSV = base("reservation", timeslice_ticks=100_000)
MUX = base("statmux", pacer={"rate": "1/1", "phase_ticks": 0})

SHORT = {"jobs": {
    "A": [{"submit_tick": 1000, "demand_ticks": 900_000, "payload": "a0"}],
    "B": [{"submit_tick": 0, "demand_ticks": 200_000, "payload": "b0"}],
}}
LONG = {"jobs": {
    "A": [{"submit_tick": 1000, "demand_ticks": 900_000, "payload": "a0"}],
    "B": [{"submit_tick": 0, "demand_ticks": 1_200_000, "payload": "b0"}],
}}


def run_raw(raw_cfg, raw_workload, seed=7):
    cfg = cfg_from(raw_cfg)
    return run(build_scenario(cfg), Workload.from_dict(raw_workload), seed)


class TestConfigValidation:
    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            cfg_from(base("elastic"))

    def test_dedicated_needs_core_per_principal(self):
        with pytest.raises(ConfigError):
            build_dedicated(cfg_from(base("dedicated", cores={"A": 0, "B": 1})))

    def test_reservation_needs_timeslice(self):
        with pytest.raises(ConfigError):
            build_reservation(cfg_from(base("reservation")))

    def test_reservation_pattern_must_cover_principals(self):
        with pytest.raises(ConfigError):
            build_reservation(cfg_from(base(
                "reservation", timeslice_ticks=1000, slice_pattern=["A"])))

    def test_reservation_scheduler_capability_forbidden(self):
        with pytest.raises(ConfigError):
            build_reservation(cfg_from(base(
                "reservation", timeslice_ticks=1000,
                capabilities={SCHEDULER: ["A^-"]})))

    def test_statmux_needs_finite_integral_rate(self):
        with pytest.raises(ConfigError):
            build_statmux(cfg_from(base("statmux")))
        with pytest.raises(ConfigError):
            build_statmux(cfg_from(base("statmux", pacer={"rate": "3/1"})))

    def test_workload_validation(self):
        cfg = cfg_from(DED)
        with pytest.raises(ConfigError):
            Workload.from_dict({"jobs": {"Z": [
                {"submit_tick": 0, "demand_ticks": 1}]}}).validate(cfg)
        with pytest.raises(ConfigError):
            Workload.from_dict({"jobs": {"A": [
                {"submit_tick": 5, "demand_ticks": 1},
                {"submit_tick": 4, "demand_ticks": 1}]}}).validate(cfg)
        with pytest.raises(ConfigError):
            Workload.from_dict({"jobs": {"A": [
                {"submit_tick": 0, "demand_ticks": 0}]}}).validate(cfg)


class TestDedicated:
    def test_result_carries_owner_only_label(self):
        trace = run_raw(DED, SHORT)
        deliveries = trace.deliveries_to(endpoint_id("A"))
        assert [ev.payload for ev in deliveries] == ["r:a0"]
        assert deliveries[0].label == "{A/A:inf}"

    def test_empty_workload_gives_setup_only_trace(self):
        trace = run_raw(DED, {"jobs": {}})
        assert trace.events == []
        assert set(trace.nodes) == {
            "ext:A", "ext:B", "gw:A", "gw:B", "core:A", "core:B"}

    def test_bob_short_vs_long_projections_identical(self):
        a = run_raw(DED, SHORT).project("A").serialize()
        b = run_raw(DED, LONG).project("A").serialize()
        assert a == b

    def test_multi_core_cluster(self):
        cfg = base("dedicated", cores={"A": 2, "B": 1})
        workload = {"jobs": {"A": [
            {"submit_tick": 0, "demand_ticks": 500_000, "payload": "x"},
            {"submit_tick": 0, "demand_ticks": 500_000, "payload": "y"},
        ]}}
        trace = run_raw(cfg, workload)
        ticks = [ev.tick for ev in trace.deliveries_to(endpoint_id("A"))]
        assert ticks == [500_000, 500_000]


def reservation_completion_oracle(submit, demand, owner_slices, timeslice):
    """Independent arithmetic for a single job on the fixed pattern: walk the
    owner's slices and drain the demand."""
    remaining = demand
    k = 0
    while True:
        start, end = owner_slices(k)
        k += 1
        if end <= submit:
            continue
        begin = max(start, submit)
        available = end - begin
        if remaining <= available:
            return begin + remaining
        remaining -= available


class TestReservation:
    def test_scheduler_and_directives_have_empty_label(self):
        trace = run_raw(RSV, SHORT)
        assert trace.nodes[SCHEDULER] == "{-/-}"
        directives = [ev for ev in trace.events
                      if ev.kind == "Send" and ev.src == SCHEDULER]
        assert directives and all(ev.label == "{-/-}" for ev in directives)

    def test_directives_add_no_taint_to_results(self):
        trace = run_raw(RSV, SHORT)
        deliveries = trace.deliveries_to(endpoint_id("A"))
        assert deliveries[0].label == "{A/A:inf}"

    def test_completion_matches_fixed_pattern_oracle(self):
        trace = run_raw(RSV, SHORT)
        # pattern [A, B] with 100k slices: A owns [200k*k, 200k*k + 100k)
        tick = reservation_completion_oracle(
            1000, 900_000, lambda k: (200_000 * k, 200_000 * k + 100_000), 100_000)
        deliveries = trace.deliveries_to(endpoint_id("A"))
        assert [ev.tick for ev in deliveries] == [tick]

    def test_idle_slices_stay_idle(self):
        # with no B demand, B's slices do no work: A finishes no earlier
        only_a = {"jobs": {"A": SHORT["jobs"]["A"]}}
        trace = run_raw(RSV, only_a)
        ticks = [ev.tick for ev in trace.deliveries_to(endpoint_id("A"))]
        with_bob = [ev.tick for ev in run_raw(RSV, SHORT).deliveries_to(endpoint_id("A"))]
        assert ticks == with_bob
        assert not any("job:B" in ev.dst for ev in trace.events)

    def test_bob_short_vs_long_projections_identical(self):
        a = run_raw(RSV, SHORT).project("A").serialize()
        b = run_raw(RSV, LONG).project("A").serialize()
        assert a == b

    def test_core_cannot_message_scheduler(self):
        eng = Engine("t", 0, 1_000_000)
        _wire(eng, cfg_from(RSV))
        result = eng.send(SHARED_CORE, SCHEDULER, "demand-info", Label.parse("{A/A:inf}"))
        assert not result.accepted
        assert isinstance(result.error, FlowDenied)


class TestStatmux:
    def test_narrative_labels_appear(self):
        trace = run_raw(MUX, SHORT)
        labels = {ev.label for ev in trace.events}
        assert "{A/A:inf,B:inf}" in labels       # result before the pacer
        assert "{A/A:1/1,B:1/1}" in labels       # released by the pacer
        pre = [ev for ev in trace.events
               if ev.kind == "Send" and ev.dst == "pacer:A"]
        assert pre and pre[0].label == "{A/A:inf,B:inf}"
        released = [ev for ev in trace.events if ev.kind == "PacerRelease"
                    and ev.src == "pacer:A"]
        assert released and released[0].label == "{A/A:1/1,B:1/1}"

    def test_gateway_declassifies_foreign_timing_for_delivery(self):
        trace = run_raw(MUX, SHORT)
        deliveries = trace.deliveries_to(endpoint_id("A"))
        assert [ev.label for ev in deliveries] == ["{A/A:1/1}"]

    def test_scheduler_label_is_top(self):
        trace = run_raw(MUX, SHORT)
        assert trace.nodes[SCHEDULER] == "{A,B/A:inf,B:inf}"

    def test_deliveries_lie_on_pacer_grid(self):
        trace = run_raw(MUX, SHORT)
        for ev in trace.project("A").events:
            assert ev.tick % TICKS_PER_SECOND == 0

    def test_scheduler_cannot_message_customer_gateway(self):
        eng = Engine("t", 0, 1_000_000)
        _wire(eng, cfg_from(MUX))
        top = Label.parse("{A,B/A:inf,B:inf}")
        result = eng.send(SCHEDULER, gateway_id("A"), "go-faster", top)
        assert not result.accepted
        assert isinstance(result.error, FlowDenied)
        assert result.error.missing_content == ["B"]

    def test_without_pacer_results_blocked_at_gateway(self):
        cfg = base("statmux", pacer={"rate": "1/1"}, omit_pacer=True)
        trace = run_raw(cfg, SHORT)
        assert trace.deliveries_to(endpoint_id("A")) == []
        rejected = [ev for ev in trace.events
                    if ev.kind == "Send" and ev.detail.startswith("rejected")
                    and ev.dst == gateway_id("A")]
        assert rejected and "timing rate too high" in rejected[0].detail

    def test_weak_capability_blocks_gateway_forwarding(self):
        cfg = base("statmux", pacer={"rate": "1/1"},
                   capabilities={"gw:A": ["B^-:1/2"]})
        trace = run_raw(cfg, SHORT)
        assert trace.deliveries_to(endpoint_id("A")) == []
        rejected = [ev for ev in trace.events
                    if ev.kind == "Send" and ev.detail.startswith("rejected")
                    and ev.src == gateway_id("A")]
        assert rejected and "cannot declassify timing tag" in rejected[0].detail

    def test_hints_flow_into_scheduler_and_are_logged(self):
        workload = {"jobs": {"B": [
            {"submit_tick": 0, "demand_ticks": 1000, "payload": "b0", "hint": "prefer-fast"}]}}
        trace = run_raw(MUX, workload)
        hints = [ev for ev in trace.events
                 if ev.kind == "Send" and ev.src == "job:B#0" and ev.dst == SCHEDULER]
        assert len(hints) == 1
        assert not hints[0].detail

    def test_content_non_interference_structure(self):
        for seed in range(5):
            w1, w2 = bob_variation_pair(seed)
            cfg = pair_config("statmux")
            t1 = run(Scenario(cfg), w1, 0).project("A")
            t2 = run(Scenario(cfg), w2, 0).project("A")
            assert [ev.payload for ev in t1.events] == [ev.payload for ev in t2.events]
            for a, b in zip(t1.events, t2.events):
                assert (a.tick - b.tick) % TICKS_PER_SECOND == 0


class TestReplay:
    @pytest.mark.parametrize("raw", [DED, RSV, MUX], ids=["ded", "rsv", "mux"])
    def test_identical_runs_serialize_identically(self, raw):
        a = run_raw(raw, SHORT, seed=3).serialize()
        b = run_raw(raw, SHORT, seed=3).serialize()
        assert a == b

    def test_seed_changes_nothing_but_the_header(self):
        # deterministic processes: payloads (and here even ticks) are a
        # function of scenario and workload contents alone
        for raw in (DED, RSV, MUX):
            a = run_raw(raw, SHORT, seed=1)
            b = run_raw(raw, SHORT, seed=2)
            assert a.events == b.events
            assert (a.seed, b.seed) == (1, 2)

    def test_monitor_soundness_recheckable_offline(self):
        from cloudrisk.labels import can_flow
        for raw in (DED, RSV, MUX):
            trace = run_raw(raw, SHORT)
            for ev in trace.events:
                if ev.kind == "Deliver" and ev.dst in trace.nodes:
                    src_label = Label.parse(ev.label)
                    dst_label = Label.parse(trace.nodes[ev.dst])
                    assert can_flow(src_label, dst_label), ev


class TestLeakEstimator:
    def test_too_few_trials_rejected(self):
        with pytest.raises(StatError):
            estimate_leak_rate(Scenario(cfg_from(MUX)), EncoderSpec.demand(), 99, 0)

    def test_dedicated_mi_exactly_zero(self):
        report = estimate_leak_rate(
            Scenario(cfg_from(DED)), EncoderSpec.demand(), 100, 1)
        assert report.mi_bits_per_trial == 0.0
        assert report.leak_rate_bits_per_sec == 0.0
        assert report.capacity_bound_bits_per_sec == 0.0

    def test_reservation_mi_exactly_zero(self):
        report = estimate_leak_rate(
            Scenario(cfg_from(RSV)), EncoderSpec.demand(), 100, 1)
        assert report.mi_bits_per_trial == 0.0

    def test_statmux_demand_encoder_leaks_at_most_bound(self):
        report = estimate_leak_rate(
            Scenario(cfg_from(MUX)), EncoderSpec.demand(), 200, 1)
        assert 0.9 <= report.mi_bits_per_trial <= 1.0
        assert report.mi_bits_per_period <= 1.0
        assert report.leak_rate_bits_per_sec <= report.capacity_bound_bits_per_sec
        assert report.distinct_observations == 2

    def test_statmux_burst_encoder_leaks_at_most_bound(self):
        report = estimate_leak_rate(
            Scenario(cfg_from(MUX)), EncoderSpec.burst(), 200, 1)
        assert report.mi_bits_per_trial > 1.0
        assert report.mi_bits_per_period <= 1.0
        assert report.leak_rate_bits_per_sec <= report.capacity_bound_bits_per_sec

    def test_estimator_is_deterministic(self):
        a = estimate_leak_rate(Scenario(cfg_from(MUX)), EncoderSpec.demand(), 120, 5)
        b = estimate_leak_rate(Scenario(cfg_from(MUX)), EncoderSpec.demand(), 120, 5)
        assert a == b

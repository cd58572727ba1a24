"""Coupled load-balancer / power-manager control loops.

Two independently designed controllers share one plant: a pair of servers.
The load balancer measures per-server response times over its period and
shifts traffic toward the faster server; the infrastructure provider's power
manager measures utilization over its own period and steps each server's
clock multiplier toward a utilization target. Either loop alone is stable.
Run together with similar periods and aligned phases, each compensation
amplifies the other's and the split swings rail to rail, destroying
throughput.

The fluid recurrence (the model's published definition, see
docs/feedback_model.md):

    work to server 1:  w1 = s * W,   w2 = W - w1          (per micro-step)
    utilization:       u_i = w_i / (C0 * c_i)
    response time:     rt_i = 1 + u'_i / (1 - u'_i),  u'_i = min(u_i, 0.95)
    throughput:        thr = min(w1, C0*c1) + min(w2, C0*c2)
    LB (each lb_period):   s <- clamp(s + lb_gain * (rt2 - rt1), 0, 1)
    PM (each pm_period):   c_i <- quantize(clamp(c_i + pm_gain*(u_i - u_target)))

with measurements averaged over each controller's own period, and clocks
quantized to discrete levels with saturation (so oscillation saturates
rather than diverging). The simulation grid is gcd(lb_period, pm_period).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

RT_UTIL_CAP = 0.95  # response-time model saturates here (rt = 20)


@dataclass
class ControllerConfig:
    lb_period: int = 60                 # ticks between load-balancer updates
    pm_period: int = 60                 # ticks between power-manager updates
    lb_gain: float = 0.06               # split shift per unit response-time difference
    pm_gain: float = 1.5                # clock step per unit utilization error
    clock_min: float = 0.5
    clock_max: float = 1.5
    clock_step: float = 0.1
    initial_split: float = 0.55
    initial_clock: float = 1.0
    phase_offset: int = 0               # ticks; PM boundaries shifted by this
    offered_load: float = 1.4           # requests per tick
    work_per_request: float = 1.0       # work units per request
    base_capacity: float = 1.0          # work units per tick at clock 1.0
    utilization_target: float = 0.7

    def validate(self) -> None:
        if self.lb_period < 1 or self.pm_period < 1:
            raise ConfigError("controller periods must be positive tick counts")
        if self.lb_gain < 0 or self.pm_gain < 0:
            raise ConfigError("gains must be non-negative")
        if not (0 < self.clock_min <= self.initial_clock <= self.clock_max):
            raise ConfigError("need 0 < clock_min <= initial_clock <= clock_max")
        if self.clock_step <= 0:
            raise ConfigError("clock_step must be positive")
        if not 0.0 <= self.initial_split <= 1.0:
            raise ConfigError("initial split must lie in [0, 1]")
        if self.offered_load <= 0 or self.work_per_request <= 0 or self.base_capacity <= 0:
            raise ConfigError("load and capacity parameters must be positive")
        if self.phase_offset < 0:
            raise ConfigError("phase_offset must be non-negative")

    def grid_ticks(self) -> int:
        """The simulation micro-step: everything happens on this grid."""
        grid = math.gcd(self.lb_period, self.pm_period)
        if self.phase_offset:
            grid = math.gcd(grid, self.phase_offset)
        return grid

    @staticmethod
    def from_dict(raw: dict) -> "ControllerConfig":
        allowed = set(ControllerConfig().__dict__)
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigError(f"unknown controller config keys: {sorted(unknown)}")
        cfg = ControllerConfig(**raw)
        cfg.validate()
        return cfg


@dataclass
class IntervalRecord:
    interval: int
    split: float
    clock1: float
    clock2: float
    util1: float
    util2: float
    rt: float           # traffic-weighted mean response time
    throughput: float   # work units served per tick


@dataclass
class FeedbackSeries:
    cfg: ControllerConfig
    records: list = field(default_factory=list)

    def splits(self) -> np.ndarray:
        return np.array([r.split for r in self.records])

    def throughputs(self) -> np.ndarray:
        return np.array([r.throughput for r in self.records])

    def to_csv(self) -> str:
        lines = ["interval,split,clock1,clock2,util1,util2,rt,throughput"]
        for r in self.records:
            lines.append(
                f"{r.interval},{r.split:.6f},{r.clock1:.2f},{r.clock2:.2f},"
                f"{r.util1:.6f},{r.util2:.6f},{r.rt:.6f},{r.throughput:.6f}"
            )
        return "\n".join(lines) + "\n"


def _response_time(util: float) -> float:
    u = min(util, RT_UTIL_CAP)
    return 1.0 + u / (1.0 - u)


def _quantize_clock(cfg: ControllerConfig, clock: float) -> float:
    clock = min(max(clock, cfg.clock_min), cfg.clock_max)
    steps = round((clock - cfg.clock_min) / cfg.clock_step)
    # snap to tidy grid values so levels compare exactly across updates
    return round(min(cfg.clock_min + steps * cfg.clock_step, cfg.clock_max), 9)


def simulate_coupled(cfg: ControllerConfig, intervals: int) -> FeedbackSeries:
    """Iterate the published recurrence for ``intervals`` load-balancer
    periods and record one row per period. Deterministic."""
    cfg.validate()
    if intervals < 10:
        raise ConfigError("need at least 10 intervals")
    grid = cfg.grid_ticks()
    lb_every = cfg.lb_period // grid
    pm_every = cfg.pm_period // grid
    pm_phase = (cfg.phase_offset // grid) % pm_every

    work_per_micro = cfg.offered_load * cfg.work_per_request * grid
    cap_per_micro = cfg.base_capacity * grid

    split = cfg.initial_split
    clocks = [cfg.initial_clock, cfg.initial_clock]

    lb_rt = [0.0, 0.0]
    pm_util = [0.0, 0.0]
    pm_count = 0
    row = {"split": 0.0, "util": [0.0, 0.0], "clock": [0.0, 0.0], "rt": 0.0, "thr": 0.0}

    series = FeedbackSeries(cfg)
    total_micro = intervals * lb_every
    for m in range(total_micro):
        w1 = split * work_per_micro
        w2 = work_per_micro - w1  # conservation is exact by construction
        caps = [cap_per_micro * clocks[0], cap_per_micro * clocks[1]]
        utils = [w1 / caps[0], w2 / caps[1]]
        rts = [_response_time(utils[0]), _response_time(utils[1])]
        thr = min(w1, caps[0]) + min(w2, caps[1])

        for i in (0, 1):
            lb_rt[i] += rts[i]
            pm_util[i] += utils[i]
        pm_count += 1
        row["split"] += split
        row["rt"] += split * rts[0] + (1.0 - split) * rts[1]
        row["thr"] += thr
        for i in (0, 1):
            row["util"][i] += utils[i]
            row["clock"][i] += clocks[i]

        boundary = m + 1
        if boundary % pm_every == pm_phase % pm_every and cfg.pm_gain > 0 and pm_count:
            for i in (0, 1):
                err = pm_util[i] / pm_count - cfg.utilization_target
                clocks[i] = _quantize_clock(cfg, clocks[i] + cfg.pm_gain * err)
            pm_util = [0.0, 0.0]
            pm_count = 0

        if boundary % lb_every == 0:
            k = lb_every
            idx = boundary // lb_every - 1
            series.records.append(IntervalRecord(
                interval=idx,
                split=row["split"] / k,
                clock1=row["clock"][0] / k,
                clock2=row["clock"][1] / k,
                util1=row["util"][0] / k,
                util2=row["util"][1] / k,
                rt=row["rt"] / k,
                throughput=row["thr"] / (k * grid),
            ))
            if cfg.lb_gain > 0:
                rt1, rt2 = lb_rt[0] / k, lb_rt[1] / k
                split = min(max(split + cfg.lb_gain * (rt2 - rt1), 0.0), 1.0)
            lb_rt = [0.0, 0.0]
            row = {"split": 0.0, "util": [0.0, 0.0], "clock": [0.0, 0.0], "rt": 0.0, "thr": 0.0}
    return series


@dataclass
class OscillationReport:
    verdict: str                 # "converged" | "oscillating" | "drifting"
    window_peak_to_peak: list
    final_peak_to_peak: float
    dominant_period: int


def detect_oscillation(series: FeedbackSeries, windows: int = 3) -> OscillationReport:
    """Classify the split trajectory.

    Splits the series into equal windows and tracks peak-to-peak amplitude:
    oscillating iff the amplitude never decreases across windows and ends
    above 0.2; converged iff it ends below 0.01. The dominant period is the
    argmax of the autocorrelation of the de-meaned split signal.
    """
    splits = series.splits()
    if len(splits) < windows:
        raise ConfigError(f"series too short for {windows} windows")
    size = len(splits) // windows
    p2p = []
    for w in range(windows):
        chunk = splits[w * size:(w + 1) * size if w < windows - 1 else len(splits)]
        p2p.append(float(chunk.max() - chunk.min()))
    final = p2p[-1]
    non_decreasing = all(p2p[i + 1] >= p2p[i] - 1e-9 for i in range(len(p2p) - 1))
    if non_decreasing and final > 0.2:
        verdict = "oscillating"
    elif final < 0.01:
        verdict = "converged"
    else:
        verdict = "drifting"

    centered = splits - splits.mean()
    dominant = 0
    if np.any(np.abs(centered) > 1e-12):
        best = -math.inf
        for lag in range(1, len(splits) // 2 + 1):
            r = float(np.dot(centered[:-lag], centered[lag:]))
            if r > best:
                best = r
                dominant = lag
    return OscillationReport(verdict, p2p, final, dominant)


def capacity_loss(series: FeedbackSeries) -> float:
    """Throughput deficit versus the balanced fixed-split baseline at full
    clocks, averaged over the last half of the series."""
    cfg = series.cfg
    offered = cfg.offered_load * cfg.work_per_request
    baseline = 2.0 * min(offered / 2.0, cfg.base_capacity * cfg.clock_max)
    achieved = series.throughputs()
    tail = achieved[len(achieved) // 2:]
    return 1.0 - float(tail.mean()) / baseline

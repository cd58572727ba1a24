"""cloudrisk: timing information flow control simulation and companion
analyzers for shared-infrastructure risks.

The core is a label algebra distinguishing *content* taint from rate-bounded
*timing* taint, enforced by a reference monitor inside a deterministic
discrete-event simulator. Three cloud-scheduling scenarios demonstrate it,
from full hardware partitioning to demand-driven multiplexing whose timing
channel is clipped by paced queues. Companion analyzers quantify two further
shared-infrastructure risks: hidden common dependencies in AND/OR service
graphs, and instability from coupled reactive control loops.
"""

from .errors import (
    CapabilityError,
    CloudriskError,
    ConfigError,
    FlowDenied,
    ParseError,
    StatError,
    TooLarge,
)
from .labels import (
    Capability,
    CapabilitySet,
    EMPTY_LABEL,
    Label,
    Rate,
    can_flow,
    declassify,
    implied_timing,
    join,
    pacer_downgrade,
)
from .pacing import PacedQueue, TICKS_PER_SECOND, channel_capacity_bound
from .engine import LabeledMessage, Process, SimEvent, Trace, receive_taint
from .scenarios import (
    EncoderSpec,
    LeakReport,
    Scenario,
    ScenarioConfig,
    Workload,
    build_dedicated,
    build_reservation,
    build_scenario,
    build_statmux,
    estimate_leak_rate,
    run,
)
from .depgraph import (
    DepGraph,
    ReliabilityReport,
    analyze,
    evaluate,
    find_shared,
    reliability_exact,
    reliability_exact_rational,
    reliability_mc,
    reliability_naive,
)
from .feedback import (
    ControllerConfig,
    FeedbackSeries,
    capacity_loss,
    detect_oscillation,
    simulate_coupled,
)

__version__ = "0.1.0"

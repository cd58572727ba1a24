"""Paced FIFO queues: rate-limited release with timing-label downgrade.

A paced queue buffers messages and releases at most one per tick of a
recurring timer at frequency ``f``; between timer ticks it emits nothing.
Whatever timing taint the queued messages carry, the only information the
queue's output can convey per timer tick is whether the queue was empty, so
released messages have their timing tags downgraded to rate ``f``.

Simulation time is integer ticks, 1 tick = 1 microsecond of model time.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction

from .errors import ConfigError
from .labels import Label, Rate, pacer_downgrade

TICKS_PER_SECOND = 1_000_000


def release_period_ticks(rate: Rate) -> int:
    """Ticks between releases for a pacer at ``rate`` releases/second.

    The rate must be finite and must divide the tick rate so the period is an
    exact integer; reproducibility here beats generality.
    """
    if rate.is_infinite:
        raise ConfigError("pacer rate must be finite")
    period = Fraction(TICKS_PER_SECOND) / rate.q
    if period.denominator != 1 or period < 1:
        raise ConfigError(
            f"pacer rate {rate.text} does not give a whole positive number of "
            f"ticks per release (got {period})"
        )
    return int(period)


def channel_capacity_bound(queue: "PacedQueue") -> float:
    """Upper bound on the queue's timing leak in bits per second.

    One bit (empty or not) per release period, so the bound is exactly the
    release frequency.
    """
    return float(queue.rate.q)


class PacedQueue:
    """FIFO of ``(item, label)`` pairs released on a fixed tick grid.

    Releases occur only at ticks congruent to ``phase_ticks`` modulo the
    period, at most one message per release tick, in arrival order.
    """

    def __init__(self, queue_id: str, rate: Rate, phase_ticks: int = 0):
        self.queue_id = queue_id
        self.rate = rate
        self.period = release_period_ticks(rate)
        if not 0 <= phase_ticks < self.period:
            raise ConfigError(
                f"pacer phase {phase_ticks} outside [0, {self.period})"
            )
        self.phase = phase_ticks
        self._fifo: deque = deque()
        self._last_release_tick: int | None = None

    def __len__(self) -> int:
        return len(self._fifo)

    def is_release_tick(self, tick: int) -> bool:
        return tick % self.period == self.phase

    def next_release_after(self, tick: int) -> int:
        """The first grid tick strictly after ``tick``."""
        k = (tick - self.phase) // self.period + 1
        return self.phase + k * self.period

    def enqueue(self, item, label: Label, now: int) -> None:
        """Append a message. Produces no observable output at enqueue time."""
        self._fifo.append((item, label))

    def on_tick(self, now: int):
        """Release the head message at a timer tick, or nothing if empty.

        Returns ``(item, downgraded_label)`` or ``None``. The released label
        is the input label with every timing tag capped at the queue's rate.
        """
        if not self.is_release_tick(now):
            raise ValueError(f"tick {now} is not a release tick of {self.queue_id}")
        if self._last_release_tick is not None and now <= self._last_release_tick:
            raise ValueError("release ticks must strictly increase")
        if not self._fifo:
            return None
        self._last_release_tick = now
        item, label = self._fifo.popleft()
        return item, pacer_downgrade(label, self.rate)

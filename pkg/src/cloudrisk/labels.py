"""Content/timing taint labels, rate-bounded declassification capabilities,
and the label algebra used by the reference monitor.

A label pairs a set of content tags (principals whose bits may be present in
an object) with a map of timing tags (principals whose information may be
carried by the *timing* of events on that object, each bounded by a leak rate
in bits per second; the rate may be infinite).

Canonical text form, used in configs, traces, and error messages:

    {A,B/A:inf,B:3/1}

content principals comma-separated, then ``/``, then ``principal:rate`` pairs
with rates written as exact ``p/q`` rationals or ``inf``. An empty side is
written ``-``, so the empty label is ``{-/-}``. The form round-trips exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import CapabilityError, ParseError

# Principal ids are short opaque strings ("A", "B", "storage1"). The single
# dash is reserved as the empty-side marker and separators are excluded.
_PRINCIPAL_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.\-]*$")

CONTENT = "content"
TIMING = "timing"


def check_principal(principal: str) -> str:
    """Validate a principal id, returning it unchanged."""
    if not isinstance(principal, str) or not _PRINCIPAL_RE.match(principal):
        raise ValueError(f"invalid principal id: {principal!r}")
    return principal


@dataclass(frozen=True, order=True)
class Rate:
    """A leak-rate bound in bits per second: an exact positive rational, or
    infinite. ``q is None`` encodes the infinite rate, which compares greater
    than every finite rate (the dataclass order on ``(0|1, Fraction)`` keys
    realizes this, see ``sort_key``).
    """

    sort_key: tuple  # (1, None) for infinite, (0, Fraction) for finite

    @staticmethod
    def finite(q) -> "Rate":
        q = Fraction(q)
        if q <= 0:
            raise ValueError(f"finite rate must be positive, got {q}")
        return Rate((0, q))

    @staticmethod
    def infinite() -> "Rate":
        return _INFINITE

    @property
    def is_infinite(self) -> bool:
        return self.sort_key[0] == 1

    @property
    def q(self) -> Fraction | None:
        """The rational value, or None for the infinite rate."""
        return None if self.is_infinite else self.sort_key[1]

    @property
    def text(self) -> str:
        if self.is_infinite:
            return "inf"
        q = self.sort_key[1]
        return f"{q.numerator}/{q.denominator}"

    @staticmethod
    def parse(text: str) -> "Rate":
        text = text.strip()
        if text == "inf":
            return _INFINITE
        try:
            return Rate.finite(Fraction(text))
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rate {text!r}: {exc}") from None

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"Rate({self.text})"


_INFINITE = Rate((1, None))


def _canon_timing(timing) -> tuple[tuple[str, Rate], ...]:
    if isinstance(timing, Mapping):
        items = timing.items()
    else:
        items = list(timing)
    seen: dict[str, Rate] = {}
    for principal, rate in items:
        check_principal(principal)
        if not isinstance(rate, Rate):
            raise TypeError(f"timing rate for {principal!r} must be a Rate")
        if principal in seen:
            raise ValueError(f"duplicate timing tag for principal {principal!r}")
        seen[principal] = rate
    return tuple(sorted(seen.items()))


@dataclass(frozen=True)
class Label:
    """An immutable ``{content/timing}`` taint label in canonical form.

    ``content`` is a frozenset of principal ids; ``timing`` is a sorted tuple
    of ``(principal, Rate)`` pairs with at most one tag per principal (a label
    with several timing rates for one principal is equivalent to keeping the
    maximum, so only the maximum is ever stored).
    """

    content: frozenset = frozenset()
    timing: tuple = ()

    def __post_init__(self):
        content = frozenset(check_principal(p) for p in self.content)
        object.__setattr__(self, "content", content)
        object.__setattr__(self, "timing", _canon_timing(self.timing))

    @property
    def is_empty(self) -> bool:
        return not self.content and not self.timing

    def timing_rate(self, principal: str) -> Rate | None:
        for p, rate in self.timing:
            if p == principal:
                return rate
        return None

    def timing_dict(self) -> dict[str, Rate]:
        return dict(self.timing)

    def principals(self) -> frozenset:
        return self.content | frozenset(p for p, _ in self.timing)

    def content_view(self) -> "Label":
        """The content component alone, as a label."""
        return Label(content=self.content)

    def timing_view(self) -> "Label":
        """The timing component alone, as a label."""
        return Label(timing=self.timing)

    @property
    def text(self) -> str:
        left = ",".join(sorted(self.content)) or "-"
        right = ",".join(f"{p}:{r.text}" for p, r in self.timing) or "-"
        return "{" + left + "/" + right + "}"

    @staticmethod
    def parse(text: str) -> "Label":
        raw = text.strip()
        if not (raw.startswith("{") and raw.endswith("}")):
            raise ParseError(f"label must be brace-delimited: {text!r}")
        body = raw[1:-1]
        if "/" not in body:
            raise ParseError(f"label needs a content/timing separator: {text!r}")
        left, right = body.split("/", 1)
        try:
            content = [] if left == "-" else [p.strip() for p in left.split(",")]
            timing = []
            if right != "-":
                for pair in right.split(","):
                    if ":" not in pair:
                        raise ValueError(f"timing tag needs principal:rate, got {pair!r}")
                    p, rate_text = pair.split(":", 1)
                    timing.append((p.strip(), Rate.parse(rate_text)))
            return Label(content=content, timing=timing)
        except ValueError as exc:
            raise ParseError(f"bad label {text!r}: {exc}") from None

    def __str__(self) -> str:
        return self.text

    def __repr__(self) -> str:
        return f"Label.parse({self.text!r})"


EMPTY_LABEL = Label()


@dataclass(frozen=True)
class Capability:
    """Authority to remove a principal's tags up to a rate bound.

    An infinite rate is the content declassifier (it removes the content tag
    and any timing tag); a finite rate removes timing tags whose rate does not
    exceed it. The two spellings ``U^-`` and ``U^-:inf`` construct the same
    object, so their equivalence is a representation identity.
    """

    principal: str
    rate: Rate = _INFINITE

    def __post_init__(self):
        check_principal(self.principal)

    @property
    def kind(self) -> str:
        return CONTENT if self.rate.is_infinite else TIMING

    @property
    def text(self) -> str:
        if self.rate.is_infinite:
            return f"{self.principal}^-"
        return f"{self.principal}^-:{self.rate.text}"

    @staticmethod
    def parse(text: str) -> "Capability":
        raw = text.strip()
        if "^-" not in raw:
            raise ParseError(f"capability must contain '^-': {text!r}")
        principal, rest = raw.split("^-", 1)
        if rest == "":
            return Capability(principal)
        if not rest.startswith(":"):
            raise ParseError(f"bad capability {text!r}")
        return Capability(principal, Rate.parse(rest[1:]))

    def __str__(self) -> str:
        return self.text


class CapabilitySet:
    """A normalized set of declassification capabilities.

    At most one capability is kept per principal: holding both ``U^-:f`` and
    ``U^-:g`` is equivalent to holding the stronger one, so only the maximum
    rate is stored.
    """

    __slots__ = ("_rates",)

    def __init__(self, caps: Iterable[Capability] = ()):
        rates: dict[str, Rate] = {}
        for cap in caps:
            if not isinstance(cap, Capability):
                raise TypeError(f"expected Capability, got {cap!r}")
            prev = rates.get(cap.principal)
            if prev is None or cap.rate > prev:
                rates[cap.principal] = cap.rate
        self._rates = dict(sorted(rates.items()))

    @property
    def caps(self) -> frozenset:
        return frozenset(Capability(p, r) for p, r in self._rates.items())

    def rate_for(self, principal: str) -> Rate | None:
        """The strongest declassification rate held for a principal."""
        return self._rates.get(principal)

    def holds_content(self, principal: str) -> bool:
        rate = self._rates.get(principal)
        return rate is not None and rate.is_infinite

    def can_drop_timing(self, principal: str, tag_rate: Rate) -> bool:
        rate = self._rates.get(principal)
        return rate is not None and rate >= tag_rate

    def issubset(self, other: "CapabilitySet") -> bool:
        """True if every authority in this set is also granted by ``other``."""
        return all(
            (o := other._rates.get(p)) is not None and o >= r
            for p, r in self._rates.items()
        )

    def issuperset(self, other: "CapabilitySet") -> bool:
        return other.issubset(self)

    def __eq__(self, other) -> bool:
        return isinstance(other, CapabilitySet) and self._rates == other._rates

    def __hash__(self) -> int:
        return hash(tuple(self._rates.items()))

    def __iter__(self):
        return iter(self.caps)

    def __len__(self) -> int:
        return len(self._rates)

    def __repr__(self) -> str:
        return "CapabilitySet([" + ", ".join(c.text for c in sorted(self.caps, key=lambda c: c.principal)) + "])"


def can_flow(src: Label, dst: Label) -> bool:
    """The flow rule: ``src`` may flow into ``dst`` iff src's content tags are
    a subset of dst's and every timing tag ``U:f`` of src is covered by a dst
    tag ``U:g`` with ``g >= f``.

    The rate order generalizes plain set inclusion: a tag bounding leakage at
    a lower rate is strictly less tainted, so it flows into a higher-rate tag.
    """
    if not src.content.issubset(dst.content):
        return False
    dst_timing = dst.timing_dict()
    for principal, rate in src.timing:
        dst_rate = dst_timing.get(principal)
        if dst_rate is None or dst_rate < rate:
            return False
    return True


def join(a: Label, b: Label) -> Label:
    """Least upper bound: content union, per-principal maximum timing rate."""
    timing = a.timing_dict()
    for principal, rate in b.timing:
        prev = timing.get(principal)
        if prev is None or rate > prev:
            timing[principal] = rate
    return Label(content=a.content | b.content, timing=timing)


def implied_timing(label: Label) -> Label:
    """Close a label under the rule that a content tag implies an unbounded
    timing tag for the same principal (a process holding U's bits can vary
    its control flow, and hence its timing, on them). Idempotent.
    """
    return join(label, Label(timing={p: Rate.infinite() for p in label.content}))


def pacer_downgrade(label: Label, rate: Rate) -> Label:
    """Cap every timing tag of ``label`` at ``rate``; content is unchanged.

    ``rate`` must be finite (pacing at an infinite rate is the identity and
    is rejected as a config error before a pacer is ever built).
    """
    if rate.is_infinite:
        raise ValueError("pacer rate must be finite")
    timing = {p: min(r, rate) for p, r in label.timing}
    return Label(content=label.content, timing=timing)


def declassify(label: Label, caps: CapabilitySet, drop) -> Label:
    """Remove the requested tags from ``label``, authorized by ``caps``.

    ``drop`` is a collection of ``(principal, kind)`` pairs with kind
    ``"content"`` or ``"timing"``; every named tag must be present in the
    label. A content tag is removed iff the content declassifier for that
    principal is held; a timing tag ``U:f`` is removed iff a capability of
    rate ``g >= f`` is held (the content declassifier counts, being the
    infinite-rate capability). A weaker capability cannot partially lower a
    tag's rate; only pacing lowers rates.

    Raises:
        CapabilityError: for the first requested tag (in canonical order)
            whose capability is absent or too weak.
        ValueError: if a requested tag is not present in the label.
    """
    requests = sorted(set(drop))
    timing = label.timing_dict()
    new_content = set(label.content)
    new_timing = dict(timing)
    for principal, kind in requests:
        if kind == CONTENT:
            if principal not in label.content:
                raise ValueError(f"no content tag {principal!r} to drop")
            if not caps.holds_content(principal):
                raise CapabilityError(principal, CONTENT, "content declassifier not held")
            new_content.discard(principal)
        elif kind == TIMING:
            tag_rate = timing.get(principal)
            if tag_rate is None:
                raise ValueError(f"no timing tag {principal!r} to drop")
            held = caps.rate_for(principal)
            if held is None:
                raise CapabilityError(principal, TIMING, "no capability held")
            if held < tag_rate:
                raise CapabilityError(
                    principal, TIMING,
                    f"held rate {held.text} is weaker than tag rate {tag_rate.text}",
                )
            del new_timing[principal]
        else:
            raise ValueError(f"unknown tag kind {kind!r}")
    return Label(content=new_content, timing=new_timing)


def drop_all(label: Label):
    """The drop request that names every tag of ``label``."""
    return [(p, CONTENT) for p in label.content] + [(p, TIMING) for p, _ in label.timing]

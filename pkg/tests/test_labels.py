"""Label algebra tests: flow rule, join lattice, declassification, pacer
downgrade, and the canonical text form."""

import random

import pytest

from cloudrisk.errors import CapabilityError, ParseError
from cloudrisk.labels import (
    CONTENT,
    TIMING,
    Capability,
    CapabilitySet,
    EMPTY_LABEL,
    Label,
    Rate,
    can_flow,
    declassify,
    drop_all,
    implied_timing,
    join,
    pacer_downgrade,
)
from spaces import R1, R2, RINF, label_space, oracle_can_flow


def L(text):
    return Label.parse(text)


class TestRate:
    def test_order_infinite_is_maximum(self):
        assert R1 < R2 < RINF
        assert RINF == Rate.infinite()
        assert max(R2, RINF) == RINF

    def test_exact_rational_equality(self):
        assert Rate.finite("1/3") == Rate.parse("2/6")
        assert Rate.finite("1/3") != Rate.finite(0.3333333333)

    def test_positive_only(self):
        with pytest.raises(ValueError):
            Rate.finite(0)
        with pytest.raises(ValueError):
            Rate.finite(-1)

    def test_text_roundtrip(self):
        for text in ("inf", "3/1", "1/2", "1000000/7"):
            assert Rate.parse(text).text == text
        assert Rate.parse("3").text == "3/1"
        assert Rate.parse("0.5").text == "1/2"


class TestLabelText:
    def test_empty_label(self):
        assert EMPTY_LABEL.text == "{-/-}"
        assert L("{-/-}") == EMPTY_LABEL

    def test_full_form_roundtrip(self):
        text = "{A,B/A:inf,B:3/1}"
        label = L(text)
        assert label.content == frozenset({"A", "B"})
        assert label.timing_rate("B") == Rate.finite(3)
        assert label.text == text

    def test_canonical_sorting(self):
        assert L("{B,A/B:1/1,A:inf}").text == "{A,B/A:inf,B:1/1}"

    def test_duplicate_timing_rejected(self):
        with pytest.raises(ParseError):
            L("{-/A:1/1,A:2/1}")

    def test_bad_principal_rejected(self):
        with pytest.raises(ValueError):
            Label(content=["-"])
        with pytest.raises(ParseError):
            L("{A/B}")

    def test_exhaustive_roundtrip(self):
        for label in label_space():
            assert Label.parse(label.text) == label


class TestCanFlow:
    def test_tainted_to_empty_disallowed(self):
        # a process with any taint cannot write to an untainted target
        assert not can_flow(L("{A/A:inf,B:1/1}"), EMPTY_LABEL)

    def test_empty_to_empty(self):
        assert can_flow(EMPTY_LABEL, EMPTY_LABEL)

    def test_lower_rate_flows_into_higher(self):
        assert can_flow(L("{-/A:1/1}"), L("{-/A:2/1}"))
        assert can_flow(L("{-/A:2/1}"), L("{-/A:inf}"))
        assert not can_flow(L("{-/A:2/1}"), L("{-/A:1/1}"))
        assert not can_flow(L("{-/A:inf}"), L("{-/A:2/1}"))

    def test_matches_elementwise_oracle_exhaustively(self):
        for a in label_space():
            for b in label_space():
                assert can_flow(a, b) == oracle_can_flow(a, b), (a.text, b.text)


class TestJoin:
    def test_content_and_timing_compose(self):
        # alice content plus bob's rate-bounded timing taint
        f = Rate.finite(1)
        assert join(L("{A/A:inf}"), Label(timing={"B": f})) == L("{A/A:inf,B:1/1}")

    def test_identity_element(self):
        for label in label_space(("A", "B"), (R1, RINF)):
            assert join(label, EMPTY_LABEL) == label

    def test_max_rate_rule(self):
        assert join(L("{-/A:1/1}"), L("{-/A:2/1}")) == L("{-/A:2/1}")


class TestDeclassify:
    def test_full_drop_with_full_caps(self):
        label = L("{A/A:inf,B:1/1}")
        caps = CapabilitySet([Capability("A"), Capability("B", Rate.finite(1))])
        assert declassify(label, caps, drop_all(label)) == EMPTY_LABEL

    def test_empty_drop_is_identity(self):
        label = L("{A/A:inf,B:1/1}")
        assert declassify(label, CapabilitySet(), []) == label

    def test_weak_timing_capability_rejected(self):
        label = L("{-/B:2/1}")
        caps = CapabilitySet([Capability("B", Rate.finite(1))])
        with pytest.raises(CapabilityError) as err:
            declassify(label, caps, [("B", TIMING)])
        assert err.value.principal == "B"

    def test_absent_capability_rejected(self):
        with pytest.raises(CapabilityError):
            declassify(L("{A/A:inf}"), CapabilitySet(), [("A", CONTENT)])

    def test_drop_of_missing_tag_is_a_contract_error(self):
        with pytest.raises(ValueError):
            declassify(EMPTY_LABEL, CapabilitySet([Capability("A")]), [("A", CONTENT)])

    def test_content_declassifier_covers_timing(self):
        label = L("{-/A:inf}")
        caps = CapabilitySet([Capability("A")])
        assert declassify(label, caps, [("A", TIMING)]) == EMPTY_LABEL

    def test_never_adds_tags(self):
        label = L("{A,B/A:inf,B:2/1}")
        caps = CapabilitySet([Capability("A")])
        out = declassify(label, caps, [("A", CONTENT)])
        assert out.content < label.content
        assert out.timing == label.timing


class TestPacerDowngrade:
    def test_caps_unbounded_tags(self):
        f = Rate.finite(1)
        assert pacer_downgrade(L("{A/A:inf,B:inf}"), f) == L("{A/A:1/1,B:1/1}")

    def test_empty_label_unchanged(self):
        assert pacer_downgrade(EMPTY_LABEL, Rate.finite(5)) == EMPTY_LABEL

    def test_elementwise_min_rule(self):
        out = pacer_downgrade(L("{-/A:1/1,B:3/1}"), Rate.finite(2))
        assert out == L("{-/A:1/1,B:2/1}")

    def test_infinite_rate_rejected(self):
        with pytest.raises(ValueError):
            pacer_downgrade(EMPTY_LABEL, RINF)


class TestImpliedTiming:
    def test_content_implies_unbounded_timing(self):
        assert implied_timing(L("{A/-}")) == L("{A/A:inf}")

    def test_empty_unchanged(self):
        assert implied_timing(EMPTY_LABEL) == EMPTY_LABEL

    def test_existing_finite_tag_raised(self):
        assert implied_timing(L("{A/A:2/1}")) == L("{A/A:inf}")

    def test_matches_join_oracle_and_idempotent(self):
        for label in label_space():
            implied = Label(timing={p: RINF for p in label.content})
            assert implied_timing(label) == join(label, implied)
            assert implied_timing(implied_timing(label)) == implied_timing(label)


class TestCapabilitySet:
    def test_infinite_timing_cap_is_content_declassifier(self):
        assert Capability("A", RINF) == Capability("A")
        assert Capability("A", RINF).kind == CONTENT

    def test_keeps_max_rate_per_principal(self):
        caps = CapabilitySet([Capability("A", R1), Capability("A", R2)])
        assert caps.rate_for("A") == R2
        assert len(caps) == 1

    def test_subset_by_strength(self):
        weak = CapabilitySet([Capability("A", R1)])
        strong = CapabilitySet([Capability("A"), Capability("B", R1)])
        assert weak.issubset(strong)
        assert not strong.issubset(weak)

    def test_text_roundtrip(self):
        for text in ("A^-", "B^-:1/2"):
            assert Capability.parse(text).text == text

    def test_infinite_and_content_authorize_identically(self):
        # representation identity: U^-:inf IS U^-
        label = L("{A/A:2/1}")
        for cap in (Capability("A"), Capability("A", RINF)):
            out = declassify(label, CapabilitySet([cap]), drop_all(label))
            assert out == EMPTY_LABEL


class TestLatticeProperties:
    """Exhaustive order/lattice checks over small label spaces."""

    def test_partial_order(self):
        space = label_space()
        for a in space:
            assert can_flow(a, a)
        for a in space:
            for b in space:
                if can_flow(a, b) and can_flow(b, a):
                    assert a == b

    def test_transitivity_on_two_principal_space(self):
        space = label_space(("A", "B"))
        for a in space:
            for b in space:
                if not can_flow(a, b):
                    continue
                for c in space:
                    if can_flow(b, c):
                        assert can_flow(a, c)

    def test_join_pair_laws(self):
        space = label_space()
        for a in space:
            assert join(a, a) == a
            for b in space:
                ab = join(a, b)
                assert ab == join(b, a)
                assert can_flow(a, ab) and can_flow(b, ab)

    def test_join_is_least_on_two_principal_space(self):
        space = label_space(("A", "B"))
        for a in space:
            for b in space:
                ab = join(a, b)
                for c in space:
                    if oracle_can_flow(a, c) and oracle_can_flow(b, c):
                        assert can_flow(ab, c)

    def test_join_associativity_sampled(self):
        space = label_space()
        rng = random.Random(20240901)
        for _ in range(20000):
            a, b, c = rng.choice(space), rng.choice(space), rng.choice(space)
            assert join(join(a, b), c) == join(a, join(b, c))

    def test_full_capability_set_maps_everything_to_empty(self):
        caps = CapabilitySet([Capability(p) for p in ("A", "B", "C")])
        for label in label_space():
            assert declassify(label, caps, drop_all(label)) == EMPTY_LABEL

    def test_downgrade_monotone_idempotent_composes(self):
        space = label_space(("A", "B"))
        f1, f2 = R1, R2
        for a in space:
            d1 = pacer_downgrade(a, f1)
            assert pacer_downgrade(d1, f1) == d1
            assert pacer_downgrade(pacer_downgrade(a, f1), f2) == pacer_downgrade(a, min(f1, f2))
            assert pacer_downgrade(pacer_downgrade(a, f2), f1) == pacer_downgrade(a, min(f1, f2))
            for b in space:
                if can_flow(a, b):
                    assert can_flow(pacer_downgrade(a, f1), pacer_downgrade(b, f1))

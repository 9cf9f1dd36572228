import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from simentangle.errors import BadExponent, BadMessage, InvalidInput, InvalidSetup, NotAFactor, NotAResidue, NotCoprime
from simentangle.modmath import Semiprime, gcd
from simentangle.protocol import (
    REPolicy,
    attempt_factor,
    ca_setup,
    classify_outcome,
    complete_session,
    derive_rng,
    make_params,
    party_submit,
    re_choices,
    re_reply,
    recover_secret,
    run_session,
    seeded_session,
)
from simentangle.roots import negation_class

ODD = REPolicy.ORDERED_DISTINCT
SWAP = REPolicy.CLASS_SWAP


def test_ca_setup_reaches_worked_example(s77):
    hits = [
        seed for seed in range(3000)
        if (p := ca_setup(s77, 3, 7, 2, random.Random(seed))).x == 48 and (p.held_alice, p.held_bob) == (5, 38)
    ]
    assert hits


def test_ca_setup_square_never_issues_negation_pair(s77):
    for seed in range(500):
        p = ca_setup(s77, 2, 7, 2, random.Random(seed))
        assert p.held_bob != 77 - p.held_alice
        assert negation_class(p.held_alice, 77) != negation_class(p.held_bob, 77)


def test_ca_setup_errors(s77):
    with pytest.raises(BadExponent):
        ca_setup(s77, 3, 3, 2, random.Random(0))
    with pytest.raises(BadMessage):
        ca_setup(s77, 3, 7, 14, random.Random(0))
    with pytest.raises(InvalidSetup):
        ca_setup(s77, 15, 7, 2, random.Random(0))


def test_ca_setup_is_uniform_over_residues(s77):
    xs = Counter(ca_setup(s77, 3, 7, 2, random.Random(i)).x for i in range(4000))
    assert len(xs) == 20
    assert min(xs.values()) > 120  # mean 200


def test_make_params_validates(cubic77, square77):
    with pytest.raises(InvalidInput):
        make_params(cubic77, 7, 2, 5, 5)
    with pytest.raises(InvalidInput):
        make_params(cubic77, 7, 2, 5, 16)
    with pytest.raises(InvalidInput):
        make_params(square77, 7, 2, 3, 74)
    p = make_params(cubic77, 7, 2, 5, 38)
    assert (p.c, p.x) == (51, 48)


def test_party_submit(cubic77):
    assert party_submit(5, cubic77) == 48
    assert party_submit(38, cubic77) == 48
    assert party_submit(1, cubic77) == 1
    with pytest.raises(NotCoprime):
        party_submit(14, cubic77)


def test_re_reply_cubic_covers_six_pairs(cubic77):
    rng = random.Random(0)
    pairs = Counter(re_reply(48, cubic77, ODD, rng) for _ in range(6000))
    assert set(pairs) == {(a, b) for a in (5, 27, 38) for b in (5, 27, 38) if a != b}
    assert min(pairs.values()) > 850


def test_re_reply_square_uses_one_class_each(square77):
    rng = random.Random(1)
    seen = set()
    for _ in range(400):
        a, b = re_reply(4, square77, SWAP, rng)
        assert {negation_class(a, 77), negation_class(b, 77)} == {(2, 75), (9, 68)}
        seen.add((a, b))
    assert len(seen) == 8


def test_re_reply_deterministic_and_checked(cubic77, square77):
    assert re_reply(48, cubic77, ODD, derive_rng(9, 3, "re")) == re_reply(48, cubic77, ODD, derive_rng(9, 3, "re"))
    with pytest.raises(InvalidSetup):
        re_reply(48, cubic77, SWAP, random.Random(0))
    with pytest.raises(NotAResidue):
        re_reply(2, square77, SWAP, random.Random(0))


def test_re_choices_counts(cubic77, square77):
    assert len(list(re_choices(48, cubic77, ODD))) == 6
    assert len(list(re_choices(4, square77, SWAP))) == 8


def test_attempt_factor():
    assert attempt_factor(5, 27, 77) == 11
    assert attempt_factor(5, 38, 77) == 11
    assert attempt_factor(5, 5, 77) is None
    for held in (2, 9, 30):
        assert gcd(77 - 2 * held, 77) == 1
        assert attempt_factor(held, 77 - held, 77) is None


def test_recover_secret():
    assert pow(2, 7, 77) == 51 and 7 * 43 % 60 == 1 and pow(51, 43, 77) == 2
    assert recover_secret(11, 77, 7, 51) == 2
    assert recover_secret(7, 77, 7, 51) == 2
    assert recover_secret(11, 77, 7, 1) == 1
    with pytest.raises(NotAFactor):
        recover_secret(5, 77, 7, 51)


def test_classify_outcome():
    assert classify_outcome("Y", "Y") == "YY"
    assert classify_outcome("N", "Y") == "NY"
    assert classify_outcome("Y", "N") == "YN"
    with pytest.raises(InvalidInput):
        classify_outcome("y", "N")


def test_session_examples(worked_params):
    t = complete_session(worked_params, (5, 27))
    assert t.outcome == "NY"
    t = complete_session(worked_params, (27, 5))
    assert t.outcome == "YY"
    assert t.alice.recovered == t.bob.recovered == 2


def test_square_sessions_are_all_or_nothing(s77):
    for seed in range(300):
        assert seeded_session(s77, 2, 7, 2, seed).outcome in ("YY", "NN")


def test_run_session_rejects_mismatched_submit(cubic77):
    from dataclasses import replace

    from simentangle.errors import ProtocolViolation

    bad = replace(make_params(cubic77, 7, 2, 5, 38), held_bob=16)
    with pytest.raises(ProtocolViolation):
        run_session(bad, ODD, 0, random.Random(0))


@settings(max_examples=200)
@given(st.integers(0, 2**32), st.sampled_from([2, 3, 5]))
def test_transcript_invariants(seed, k):
    s = Semiprime(77, 7, 11)
    t = seeded_session(s, k, 7, 2, seed)
    p = t.params
    for held, res in ((p.held_alice, t.alice), (p.held_bob, t.bob)):
        assert pow(res.received, k, 77) == p.x
        if res.outcome_bit == "Y":
            assert res.recovered == 2 and res.factor_found in (7, 11)
        else:
            assert res.recovered is None and res.factor_found is None
        if k != 2:
            assert (res.outcome_bit == "Y") == (res.received != held)
    assert t.outcome == t.alice.outcome_bit + t.bob.outcome_bit
    if k != 2:
        assert t.re_pair[0] != t.re_pair[1]
    assert t.to_json() == seeded_session(s, k, 7, 2, seed).to_json()


def test_derive_rng_streams_differ():
    assert derive_rng(1, 0, "ca").random() != derive_rng(1, 0, "re").random()
    assert derive_rng(1, 0, "re").random() != derive_rng(1, 1, "re").random()


def test_transcript_json_schema(s77):
    d = seeded_session(s77, 3, 7, 2, 7).to_dict()
    assert list(d) == ["session_id", "N", "k", "e", "x", "held", "re_pair", "alice", "bob", "outcome", "seed"]
    assert list(d["alice"]) == ["received", "factor", "recovered", "bit"]

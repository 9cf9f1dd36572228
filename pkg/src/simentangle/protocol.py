"""CA, RE, Alice and Bob for the square (k = 2) and odd-degree variants.

RE's private choice procedure is a seeded ``random.Random``. Every role draws
from its own stream derived from ``(master seed, session id, role)``, so a
session replays identically whether the roles share a process or not.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

from .errors import (
    BadExponent,
    BadMessage,
    InvalidInput,
    InvalidSetup,
    NotAFactor,
    NotAResidue,
    NotCoprime,
    ProtocolViolation,
)
from .modmath import Semiprime, euler_phi, gcd, invmod, powmod
from .roots import GameSetup, RootSet, kth_roots_mod_semiprime, negation_class, validate_setup

YES, NO = "Y", "N"
OUTCOMES = ("YY", "YN", "NY", "NN")


def derive_rng(seed: int, session_id: int, role: str) -> random.Random:
    # str seeds are hashed with SHA-512, stable across processes and platforms
    return random.Random(f"sep:{seed}:{session_id}:{role}")


class REPolicy(enum.Enum):
    CLASS_SWAP = "class-swap"
    ORDERED_DISTINCT = "ordered-distinct"

    @classmethod
    def for_setup(cls, setup: GameSetup) -> "REPolicy":
        return cls.CLASS_SWAP if setup.k == 2 else cls.ORDERED_DISTINCT

    def check(self, setup: GameSetup) -> None:
        if (self is REPolicy.CLASS_SWAP) != (setup.k == 2):
            raise InvalidSetup(f"policy {self.value} cannot drive a k={setup.k} game")


@dataclass(frozen=True)
class ProtocolParams:
    setup: GameSetup
    e: int
    m: int
    c: int
    x: int
    held_alice: int
    held_bob: int

    @property
    def N(self) -> int:
        return self.setup.N

    @property
    def k(self) -> int:
        return self.setup.k

    def validate(self) -> "ProtocolParams":
        N, k = self.N, self.k
        if gcd(self.e, euler_phi(self.setup.s)) != 1:
            raise BadExponent(f"gcd(e={self.e}, phi(N)) != 1")
        if not 1 <= self.m < N or gcd(self.m, N) != 1:
            raise BadMessage(f"message {self.m} must be a unit modulo {N}")
        if self.c != powmod(self.m, self.e, N):
            raise InvalidInput("ciphertext does not match m**e mod N")
        for held in (self.held_alice, self.held_bob):
            if gcd(held, N) != 1 or powmod(held, k, N) != self.x:
                raise InvalidInput(f"held root {held} is not a {k}-th root of {self.x}")
        if self.held_alice == self.held_bob:
            raise InvalidInput("Alice and Bob must hold different roots")
        if k == 2 and self.held_bob == N - self.held_alice:
            raise InvalidInput("square variant needs held roots from different negation classes")
        return self


def make_params(setup: GameSetup, e: int, m: int, held_alice: int, held_bob: int) -> ProtocolParams:
    """Params for a caller-chosen pair of held roots (e.g. the worked 5/38 example)."""
    N = setup.N
    if not 0 < m < N:
        raise BadMessage(f"message {m} out of range")
    x = powmod(held_alice, setup.k, N)
    return ProtocolParams(setup, e, m, powmod(m, e, N), x, held_alice, held_bob).validate()


@lru_cache(maxsize=64)
def _power_residues(setup: GameSetup) -> tuple[int, ...]:
    N, k = setup.N, setup.k
    return tuple(sorted({powmod(r, k, N) for r in range(1, N) if gcd(r, N) == 1}))


def ca_setup(s: Semiprime, k: int, e: int, m: int, rng: random.Random) -> ProtocolParams:
    """Pick a random power residue x and issue one root of it to each party."""
    setup = validate_setup(k, s)
    N = s.N
    if gcd(e, euler_phi(s)) != 1:
        raise BadExponent(f"gcd(e={e}, phi({N})={euler_phi(s)}) != 1")
    if not 1 <= m < N or gcd(m, N) != 1:
        raise BadMessage(f"message {m} must be a unit modulo {N}")
    x = rng.choice(_power_residues(setup))
    roots = kth_roots_mod_semiprime(x, setup).roots
    if k == 2:
        alice = rng.choice(roots)
        own = negation_class(alice, N)
        bob = rng.choice([r for r in roots if r not in own])
    else:
        alice, bob = rng.sample(roots, 2)
    return make_params(setup, e, m, alice, bob)


def party_submit(held: int, setup: GameSetup) -> int:
    if gcd(held, setup.N) != 1:
        raise NotCoprime(f"held root {held} shares a factor with {setup.N}")
    return powmod(held, setup.k, setup.N)


def _root_set(x: int, setup: GameSetup) -> RootSet:
    rs = kth_roots_mod_semiprime(x, setup)
    if not rs.roots:
        raise NotAResidue(f"{x} is not a {setup.k}-th power residue modulo {setup.N}")
    return rs


def _classes(rs: RootSet, N: int) -> list[tuple[int, int]]:
    return sorted({negation_class(r, N) for r in rs.roots})


def re_reply(x: int, setup: GameSetup, policy: REPolicy, rng: random.Random) -> tuple[int, int]:
    """RE's (root for Alice, root for Bob)."""
    policy.check(setup)
    rs = _root_set(x, setup)
    if policy is REPolicy.CLASS_SWAP:
        classes = _classes(rs, setup.N)
        if rng.randrange(2):
            classes.reverse()
        return rng.choice(classes[0]), rng.choice(classes[1])
    n = len(rs.roots)
    i = rng.randrange(n)
    j = rng.randrange(n - 1)
    if j >= i:
        j += 1
    return rs.roots[i], rs.roots[j]


def re_choices(x: int, setup: GameSetup, policy: REPolicy) -> Iterator[tuple[int, int]]:
    """Every equally likely outcome of :func:`re_reply`, one per elementary choice."""
    policy.check(setup)
    rs = _root_set(x, setup)
    if policy is REPolicy.CLASS_SWAP:
        first, second = _classes(rs, setup.N)
        for to_alice, to_bob in ((first, second), (second, first)):
            for ra in to_alice:
                for rb in to_bob:
                    yield ra, rb
        return
    for ra in rs.roots:
        for rb in rs.roots:
            if ra != rb:
                yield ra, rb


def attempt_factor(held: int, received: int, N: int) -> Optional[int]:
    if received == held:
        return None
    g = gcd((received - held) % N, N)
    return g if 1 < g < N else None


def recover_secret(factor: int, N: int, e: int, c: int) -> int:
    if not 1 < factor < N or N % factor:
        raise NotAFactor(f"{factor} is not a proper factor of {N}")
    phi = (factor - 1) * (N // factor - 1)
    return powmod(c, invmod(e, phi), N)


def classify_outcome(alice_bit: str, bob_bit: str) -> str:
    for bit in (alice_bit, bob_bit):
        if bit not in (YES, NO):
            raise InvalidInput(f"outcome bit must be Y or N, got {bit!r}")
    return alice_bit + bob_bit


@dataclass(frozen=True)
class PartyResult:
    received: int
    factor_found: Optional[int]
    recovered: Optional[int]

    @property
    def outcome_bit(self) -> str:
        return NO if self.factor_found is None else YES

    def to_dict(self) -> dict:
        return {
            "received": self.received,
            "factor": self.factor_found,
            "recovered": self.recovered,
            "bit": self.outcome_bit,
        }


def party_finish(held: int, received: int, N: int, e: int, c: int) -> PartyResult:
    """Step 3 for one party: try to factor, then decrypt."""
    factor = attempt_factor(held, received, N)
    recovered = None if factor is None else recover_secret(factor, N, e, c)
    return PartyResult(received, factor, recovered)


@dataclass(frozen=True)
class SessionTranscript:
    session_id: int
    params: ProtocolParams
    re_pair: tuple[int, int]
    alice: PartyResult
    bob: PartyResult
    outcome: str
    seed: Optional[int]

    def to_dict(self) -> dict:
        p = self.params
        return {
            "session_id": self.session_id,
            "N": p.N,
            "k": p.k,
            "e": p.e,
            "x": p.x,
            "held": [p.held_alice, p.held_bob],
            "re_pair": list(self.re_pair),
            "alice": self.alice.to_dict(),
            "bob": self.bob.to_dict(),
            "outcome": self.outcome,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def complete_session(
    params: ProtocolParams, re_pair: tuple[int, int], session_id: int = 0, seed: Optional[int] = None
) -> SessionTranscript:
    """Steps 3 onward, given the pair RE sent."""
    N, e, c = params.N, params.e, params.c
    alice = party_finish(params.held_alice, re_pair[0], N, e, c)
    bob = party_finish(params.held_bob, re_pair[1], N, e, c)
    outcome = classify_outcome(alice.outcome_bit, bob.outcome_bit)
    return SessionTranscript(session_id, params, tuple(re_pair), alice, bob, outcome, seed)


def run_session(
    params: ProtocolParams,
    policy: REPolicy,
    session_id: int,
    rng: random.Random,
    seed: Optional[int] = None,
) -> SessionTranscript:
    setup = params.setup
    x_alice = party_submit(params.held_alice, setup)
    x_bob = party_submit(params.held_bob, setup)
    if x_alice != x_bob:
        raise ProtocolViolation(f"parties submitted different values ({x_alice} != {x_bob})")
    re_pair = re_reply(x_alice, setup, policy, rng)
    return complete_session(params, re_pair, session_id, seed)


def seeded_session(s: Semiprime, k: int, e: int, m: int, seed: int, session_id: int = 0) -> SessionTranscript:
    """CA setup plus one session, both driven by streams derived from ``seed``."""
    params = ca_setup(s, k, e, m, derive_rng(seed, session_id, "ca"))
    policy = REPolicy.for_setup(params.setup)
    return run_session(params, policy, session_id, derive_rng(seed, session_id, "re"), seed=seed)

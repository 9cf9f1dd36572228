"""Exact outcome distributions over {YY, YN, NY, NN} and their empirical checks."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

from .errors import ImpossibleOutcome, InvalidDegree, InvalidInput
from .protocol import OUTCOMES, ProtocolParams, REPolicy, derive_rng, run_session

ALICE, BOB = "alice", "bob"


def _fraction_json(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator}


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities (not amplitudes) of YY, YN, NY, NN."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        for name in "abcd":
            v = Fraction(getattr(self, name))
            if not 0 <= v <= 1:
                raise InvalidInput(f"probability {name}={v} outside [0, 1]")
            object.__setattr__(self, name, v)
        if self.a + self.b + self.c + self.d != 1:
            raise InvalidInput("probabilities must sum to exactly 1")

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return self.a, self.b, self.c, self.d

    def __getitem__(self, outcome: str) -> Fraction:
        return self.as_tuple()[OUTCOMES.index(outcome)]

    def to_text(self) -> str:
        return " ".join(str(f) for f in self.as_tuple())

    def to_json(self) -> dict:
        return {o: _fraction_json(f) for o, f in zip(OUTCOMES, self.as_tuple())}


@dataclass(frozen=True)
class TrialCounts:
    n_yy: int = 0
    n_yn: int = 0
    n_ny: int = 0
    n_nn: int = 0

    @property
    def trials(self) -> int:
        return self.n_yy + self.n_yn + self.n_ny + self.n_nn

    @classmethod
    def from_outcomes(cls, outcomes: Iterable[str]) -> "TrialCounts":
        tally = dict.fromkeys(OUTCOMES, 0)
        for o in outcomes:
            tally[o] += 1
        return cls(*(tally[o] for o in OUTCOMES))

    def as_tuple(self) -> tuple[int, int, int, int]:
        return self.n_yy, self.n_yn, self.n_ny, self.n_nn

    def __getitem__(self, outcome: str) -> int:
        return self.as_tuple()[OUTCOMES.index(outcome)]

    def frequencies(self) -> tuple[float, ...]:
        return tuple(n / self.trials for n in self.as_tuple())

    def distribution(self) -> OutcomeDistribution:
        """Exact relative frequencies."""
        return OutcomeDistribution(*(Fraction(n, self.trials) for n in self.as_tuple()))


def _check_degree(k: int) -> None:
    if k < 2:
        raise InvalidDegree(f"degree must be >= 2, got {k}")


def theorem_state(k: int) -> OutcomeDistribution:
    """Closed form for the odd-degree game; k = 2 by continuation gives (1/2, 0, 0, 1/2)."""
    _check_degree(k)
    cases = k * (k - 1)
    cross = Fraction(k - 2, cases)
    return OutcomeDistribution(Fraction(k * k - 3 * k + 3, cases), cross, cross, Fraction(1, cases))


def enumerate_counts(k: int) -> TrialCounts:
    """Tally RE's equally likely choices over abstract root indices.

    Alice holds index 0 and Bob index 1. For odd k RE sends any ordered pair of
    distinct indices; for k = 2 the two choices are which negation class goes
    to whom.
    """
    _check_degree(k)
    if k == 2:
        # own class back -> nobody factors; swapped classes -> both do
        return TrialCounts.from_outcomes(["NN", "YY"])
    if k % 2 == 0:
        raise InvalidDegree(f"even degree {k} > 2 has no enumeration")
    held_alice, held_bob = 0, 1
    outcomes = []
    for to_alice in range(k):
        for to_bob in range(k):
            if to_alice == to_bob:
                continue
            a_bit = "Y" if to_alice != held_alice else "N"
            b_bit = "Y" if to_bob != held_bob else "N"
            outcomes.append(a_bit + b_bit)
    return TrialCounts.from_outcomes(outcomes)


def enumerate_distribution(k: int) -> OutcomeDistribution:
    return enumerate_counts(k).distribution()


def marginal_success(dist: OutcomeDistribution, party: str) -> Fraction:
    if party == ALICE:
        return dist.a + dist.b
    if party == BOB:
        return dist.a + dist.c
    raise InvalidInput(f"party must be {ALICE!r} or {BOB!r}, got {party!r}")


def monte_carlo(params: ProtocolParams, policy: REPolicy, trials: int, master_seed: int) -> TrialCounts:
    """Run ``trials`` sessions on fixed params; session i uses RE stream (master_seed, i)."""
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    return TrialCounts.from_outcomes(
        run_session(params, policy, i, derive_rng(master_seed, i, "re")).outcome for i in range(trials)
    )


def chi_square(counts: TrialCounts, expected: OutcomeDistribution) -> float:
    """Pearson statistic over cells with nonzero expected probability."""
    stat = 0.0
    n = counts.trials
    for outcome in OUTCOMES:
        prob, observed = expected[outcome], counts[outcome]
        if prob == 0:
            if observed:
                raise ImpossibleOutcome(f"{observed} {outcome} outcomes where probability is 0")
            continue
        mean = float(prob) * n
        stat += (observed - mean) ** 2 / mean
    return stat


class FitResult(NamedTuple):
    statistic: float
    dof: int
    threshold: float
    passed: bool


def goodness_of_fit(counts: TrialCounts, expected: OutcomeDistribution, level: float = 0.999) -> FitResult:
    stat = chi_square(counts, expected)
    dof = sum(1 for p in expected.as_tuple() if p > 0) - 1
    if dof < 1:
        return FitResult(stat, 0, 0.0, stat == 0)
    from scipy.stats import chi2  # deferred: keeps CLI startup fast for network roles

    threshold = float(chi2.ppf(level, dof))
    return FitResult(stat, dof, threshold, stat < threshold)

"""k-th roots modulo primes and semiprimes, and residue tables."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .errors import (
    InvalidInput,
    InvalidSetup,
    NotCoprime,
    UnsupportedPrime,
    UnsupportedVariant,
)
from .modmath import Semiprime, crt_combine, gcd, invmod, powmod

BRUTE_FORCE_LIMIT = 2**20


@dataclass(frozen=True)
class RootSet:
    value: int
    k: int
    roots: tuple[int, ...]

    def __len__(self):
        return len(self.roots)

    def __iter__(self):
        return iter(self.roots)

    def index(self, r: int) -> int:
        return self.roots.index(r)


@dataclass(frozen=True)
class GameSetup:
    """A semiprime paired with a root degree. Build through :func:`validate_setup`."""

    s: Semiprime
    k: int

    @property
    def N(self) -> int:
        return self.s.N


def count_kth_roots(k: int, s: Semiprime) -> int:
    if k < 1:
        raise InvalidInput("degree must be >= 1")
    return gcd(k, s.p - 1) * gcd(k, s.q - 1)


@lru_cache(maxsize=4096)
def _roots_mod_prime(a: int, k: int, p: int) -> tuple[int, ...]:
    if a == 0 or p == 2:
        return (a,)
    if gcd(k, p - 1) == 1:
        # x -> x^k permutes the units, so the inverse exponent gives the lone root
        return (powmod(a, invmod(k, p - 1), p),)
    if p > BRUTE_FORCE_LIMIT:
        raise UnsupportedPrime(f"no brute-force root search above {BRUTE_FORCE_LIMIT} (p={p}, k={k})")
    return tuple(x for x in range(1, p) if powmod(x, k, p) == a)


def kth_roots_mod_prime(a: int, k: int, p: int) -> list[int]:
    """All x < p with x**k == a (mod p), ascending."""
    if not 0 <= a < p:
        raise InvalidInput(f"residue {a} out of range for prime {p}")
    return list(_roots_mod_prime(a, k, p))


@lru_cache(maxsize=65536)
def kth_roots(a: int, k: int, s: Semiprime) -> RootSet:
    """Every k-th root of ``a`` modulo ``s.N`` by CRT over the two prime factors.

    Works for any degree; game code should go through :func:`kth_roots_mod_semiprime`.
    """
    N = s.N
    if not 0 <= a < N:
        raise InvalidInput(f"residue {a} out of range for modulus {N}")
    if gcd(a, N) != 1:
        raise NotCoprime(f"{a} shares a factor with {N}")
    rp = _roots_mod_prime(a % s.p, k, s.p)
    rq = _roots_mod_prime(a % s.q, k, s.q)
    roots = sorted(crt_combine(x, s.p, y, s.q) for x, y in product(rp, rq))
    return RootSet(a, k, tuple(roots))


def kth_roots_mod_semiprime(a: int, setup: GameSetup) -> RootSet:
    return kth_roots(a, setup.k, setup.s)


def residue_table(setup: GameSetup) -> list[tuple[int, RootSet]]:
    """Every coprime k-th power residue below N, ascending, with its roots."""
    N, k = setup.N, setup.k
    values = sorted({powmod(r, k, N) for r in range(1, N) if gcd(r, N) == 1})
    return [(n, kth_roots_mod_semiprime(n, setup)) for n in values]


def validate_setup(k: int, s: Semiprime) -> GameSetup:
    """Accept k = 2, or odd k whose roots all agree modulo exactly one prime."""
    if k < 2:
        raise InvalidSetup(f"degree must be >= 2, got {k}")
    if k == 2:
        if s.p == 2:
            raise InvalidSetup("the square variant needs an odd modulus")
        return GameSetup(s, k)
    if k % 2 == 0:
        raise UnsupportedVariant(f"even degree {k} > 2 is not supported")
    gp, gq = gcd(k, s.p - 1), gcd(k, s.q - 1)
    if sorted((gp, gq)) != [1, k]:
        raise InvalidSetup(
            f"k={k} over {s.N}: gcd(k, p-1)={gp}, gcd(k, q-1)={gq}; need one equal to k and the other 1"
        )
    return GameSetup(s, k)


def negation_class(r: int, N: int) -> tuple[int, int]:
    if not 0 < r < N:
        raise InvalidInput(f"{r} is not a nonzero residue modulo {N}")
    return min(r, N - r), max(r, N - r)

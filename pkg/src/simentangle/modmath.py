"""Modular arithmetic for desk-scale moduli (N <= 2**31 - 1)."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInput, InvalidModulus, NotInvertible, NotSemiprime

MAX_MODULUS = 2**31 - 1


def _check_modulus(N: int) -> None:
    if N < 2:
        raise InvalidModulus(f"modulus must be >= 2, got {N}")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class Semiprime:
    """N = p*q with p < q distinct primes."""

    N: int
    p: int
    q: int

    def __post_init__(self):
        if not (self.p < self.q and self.p * self.q == self.N):
            raise NotSemiprime(f"({self.p}, {self.q}) is not a canonical factorisation of {self.N}")
        if self.N > MAX_MODULUS:
            raise NotSemiprime(f"{self.N} exceeds the supported bound {MAX_MODULUS}")
        if not (is_prime(self.p) and is_prime(self.q)):
            raise NotSemiprime(f"{self.N} = {self.p}*{self.q} has a non-prime factor")

    @classmethod
    def from_factors(cls, p: int, q: int) -> "Semiprime":
        p, q = min(p, q), max(p, q)
        return cls(p * q, p, q)

    @property
    def phi(self) -> int:
        return euler_phi(self)


def mulmod(a: int, b: int, N: int) -> int:
    _check_modulus(N)
    return (a * b) % N


def powmod(base: int, exp: int, N: int) -> int:
    _check_modulus(N)
    if exp < 0:
        raise InvalidInput("negative exponent")
    result = 1
    base %= N
    while exp:
        if exp & 1:
            result = result * base % N
        base = base * base % N
        exp >>= 1
    return result % N


def gcd(a: int, b: int) -> int:
    """Euclid; gcd(0, 0) == 0."""
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with a*x + b*y == g == gcd(a, b)."""
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        quot, rem = divmod(a, b)
        a, b = b, rem
        x0, x1 = x1, x0 - quot * x1
        y0, y1 = y1, y0 - quot * y1
    return a, x0, y0


def invmod(a: int, M: int) -> int:
    _check_modulus(M)
    g, x, _ = egcd(a % M, M)
    if g != 1:
        raise NotInvertible(f"{a} has no inverse modulo {M} (gcd {g})")
    return x % M


def crt_combine(rp: int, p: int, rq: int, q: int) -> int:
    """The unique x < p*q with x = rp (mod p) and x = rq (mod q)."""
    if p == q:
        raise InvalidInput("CRT moduli must differ")
    if not (0 <= rp < p and 0 <= rq < q):
        raise InvalidInput("residues out of range")
    # Garner's form: x = rp + p * ((rq - rp) * p^-1 mod q)
    t = (rq - rp) * invmod(p % q, q) % q
    return rp + p * t


def factor_semiprime(N: int) -> Semiprime:
    """Trial division. Harness setup only; honest parties never call this."""
    if N < 6:
        raise NotSemiprime(f"{N} is too small to be a semiprime")
    if N > MAX_MODULUS:
        raise NotSemiprime(f"{N} exceeds the supported bound {MAX_MODULUS}")
    for f in range(2, math.isqrt(N) + 1):
        if N % f == 0:
            cofactor = N // f
            if cofactor == f or not is_prime(cofactor):
                raise NotSemiprime(f"{N} is not a product of two distinct primes")
            return Semiprime(N, f, cofactor)
    raise NotSemiprime(f"{N} is prime")


def euler_phi(s: Semiprime) -> int:
    return (s.p - 1) * (s.q - 1)

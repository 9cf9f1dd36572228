"""Command-line entry point: ``sep <command>``.

Exit codes: 0 success, 2 invalid input, 3 theorem-check mismatch,
4 statistical FAIL, 5 transport failure or protocol violation.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import random
import sys
from dataclasses import dataclass
from typing import Optional

from .errors import NotAResidue, NotCoprime, SEPError, TransportFailure
from .modmath import factor_semiprime, gcd
from .protocol import OUTCOMES, REPolicy, SessionTranscript, ca_setup, derive_rng, seeded_session
from .roots import kth_roots, residue_table, validate_setup
from .statekit import (
    ALICE,
    BOB,
    enumerate_distribution,
    goodness_of_fit,
    marginal_success,
    monte_carlo,
    theorem_state,
)
from . import wire

EXIT_OK, EXIT_INVALID, EXIT_MISMATCH, EXIT_FAIL, EXIT_TRANSPORT = 0, 2, 3, 4, 5

log = logging.getLogger("simentangle")


@dataclass
class RunConfig:
    modulus: int = 77
    k: int = 3
    e: int = 7
    m: int = 2
    seed: Optional[int] = None
    trials: int = 1
    fmt: str = "text"

    @classmethod
    def from_args(cls, args) -> "RunConfig":
        return cls(
            modulus=args.modulus,
            k=args.k,
            e=getattr(args, "e", 7),
            m=getattr(args, "m", 2),
            seed=resolve_seed(getattr(args, "seed", None)),
            trials=getattr(args, "trials", 1),
            fmt=args.format,
        )

    def validate(self):
        """Check every parameter constraint up front; returns the semiprime."""
        s = factor_semiprime(self.modulus)
        validate_setup(self.k, s)
        # a throwaway setup surfaces bad-exponent / bad-message before any session runs
        ca_setup(s, self.k, self.e, self.m, random.Random(0))
        if self.trials < 1:
            raise SEPError("trials must be >= 1")
        return s


def resolve_seed(seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("SEP_SEED")
    if env is not None:
        return int(env)
    return random.SystemRandom().randrange(2**32)


def _emit_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def _frac(f) -> dict:
    return {"num": f.numerator, "den": f.denominator}


def cmd_roots(args) -> int:
    s = factor_semiprime(args.modulus)
    if gcd(args.value, s.N) != 1:
        raise NotCoprime(f"gcd({args.value}, {s.N}) != 1")
    rs = kth_roots(args.value, args.k, s)
    if not rs.roots:
        raise NotAResidue(f"{args.value} has no {args.k}-th root modulo {s.N}")
    if args.format == "json":
        _emit_json({"n": args.value, "k": args.k, "N": s.N, "roots": list(rs.roots)})
    else:
        print(" ".join(map(str, rs.roots)))
    return EXIT_OK


def cmd_table(args) -> int:
    setup = validate_setup(args.k, factor_semiprime(args.modulus))
    rows = residue_table(setup)
    if args.format == "json":
        _emit_json([{"n": n, "roots": list(rs.roots)} for n, rs in rows])
        return EXIT_OK
    for n, rs in rows:
        print(f"{n}: " + " ".join(map(str, rs.roots)))
    return EXIT_OK


def cmd_theorem(args) -> int:
    k = args.k
    dist = theorem_state(k)
    marginal = marginal_success(dist, ALICE)
    matches = None
    if args.check:
        oracle = enumerate_distribution(k)
        matches = oracle == dist and marginal_success(dist, BOB) == marginal
        print(f"check: enumeration over {k * (k - 1) if k > 2 else 2} cases "
              f"{'matches' if matches else 'DIFFERS'} ({oracle.to_text()})", file=sys.stderr)
    if args.format == "json":
        _emit_json({"k": k, "state": dist.to_json(), "marginal": _frac(marginal), "check": matches})
    else:
        print(f"{dist.to_text()} | marginal {marginal}")
    return EXIT_MISMATCH if matches is False else EXIT_OK


def _print_transcript(t: SessionTranscript, fmt: str) -> None:
    if fmt == "json":
        print(t.to_json())
        return
    d = t.to_dict()
    print(f"session {d['session_id']}  N={d['N']} k={d['k']} e={d['e']} x={d['x']} seed={d['seed']}")
    print(f"held     alice={d['held'][0]} bob={d['held'][1]}")
    print(f"re_pair  alice={d['re_pair'][0]} bob={d['re_pair'][1]}")
    for name in ("alice", "bob"):
        r = d[name]
        print(f"{name:<8} received={r['received']} factor={r['factor']} recovered={r['recovered']} bit={r['bit']}")
    print(f"outcome  {d['outcome']}")


def cmd_run(args) -> int:
    cfg = RunConfig.from_args(args)
    s = cfg.validate()
    _print_transcript(seeded_session(s, cfg.k, cfg.e, cfg.m, cfg.seed, args.session_id), cfg.fmt)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.strict and args.seed is None:
        raise SEPError("--strict requires --seed")
    cfg = RunConfig.from_args(args)
    s = cfg.validate()
    params = ca_setup(s, cfg.k, cfg.e, cfg.m, derive_rng(cfg.seed, 0, "ca"))
    counts = monte_carlo(params, REPolicy.for_setup(params.setup), cfg.trials, cfg.seed)
    expected = theorem_state(cfg.k)
    fit = goodness_of_fit(counts, expected)
    freqs = counts.frequencies()
    verdict = "PASS" if fit.passed else "FAIL"
    if cfg.fmt == "json":
        _emit_json({
            "N": s.N, "k": cfg.k, "trials": cfg.trials, "seed": cfg.seed,
            "held": [params.held_alice, params.held_bob],
            "counts": dict(zip(OUTCOMES, counts.as_tuple())),
            "frequencies": dict(zip(OUTCOMES, freqs)),
            "expected": expected.to_json(),
            "chi_square": fit.statistic, "dof": fit.dof, "threshold": fit.threshold,
            "verdict": verdict,
        })
    else:
        print(f"N={s.N} k={cfg.k} trials={cfg.trials} seed={cfg.seed}")
        print(f"{'outcome':<8}{'count':>8}{'freq':>10}  expected")
        for o, n, f, p in zip(OUTCOMES, counts.as_tuple(), freqs, expected.as_tuple()):
            print(f"{o:<8}{n:>8}{f:>10.5f}  {p} ({float(p):.5f})")
        print(f"chi-square {fit.statistic:.4f} (dof {fit.dof}, 99.9% threshold {fit.threshold:.2f}) {verdict}")
    return EXIT_OK if fit.passed else EXIT_FAIL


def _need(args, name: str) -> str:
    value = getattr(args, name)
    if not value:
        raise SEPError(f"--{name} HOST:PORT is required for role {args.role}")
    wire.parse_endpoint(value)
    return value


def cmd_serve(args) -> int:
    role = args.role
    if role == "re":
        s = factor_semiprime(args.modulus)
        coro = wire.serve_root_extractor(_need(args, "re"), s, resolve_seed(args.seed), args.sessions, args.timeout)
    elif role in ("alice", "bob"):
        slot = wire.ALICE_SLOT if role == "alice" else wire.BOB_SLOT
        coro = wire.serve_party(
            _need(args, role), slot, _need(args, "re"), args.sessions, args.timeout, tamper_x=args.tamper_x
        )
    else:
        cfg = RunConfig.from_args(args)
        s = cfg.validate()
        ca = wire.CertificationAuthority(s, cfg.k, cfg.e, cfg.m, cfg.seed)
        sessions = range(args.session_id, args.session_id + max(args.sessions, 1))
        coro = wire.run_certification_authority(ca, _need(args, "alice"), _need(args, "bob"), sessions, args.timeout)
    try:
        result = asyncio.run(coro)
    except TransportFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except OSError as exc:
        print(f"error: transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    if role == "ca":
        if len(result) == 1:
            _print_transcript(result[0], cfg.fmt)
        elif cfg.fmt == "json":
            _emit_json([t.to_dict() for t in result])
        else:
            for i, t in enumerate(result):
                if i:
                    print()
                _print_transcript(t, cfg.fmt)
    return EXIT_OK


def _add_common(p, *, protocol=False, seed=False):
    p.add_argument("--modulus", type=int, default=77, help="semiprime N (default 77)")
    p.add_argument("--k", type=int, default=3, help="root degree (default 3)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    if protocol:
        p.add_argument("--e", type=int, default=7, help="public exponent (default 7)")
        p.add_argument("--m", type=int, default=2, help="secret message (default 2)")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="master seed (falls back to $SEP_SEED)")


def _add_network(p):
    for role in ("re", "alice", "bob"):
        p.add_argument(f"--{role}", metavar="HOST:PORT", help=f"{role} endpoint")
    p.add_argument("--sessions", type=int, default=0,
                   help="sessions to handle before exiting (servers: 0 = forever; ca: default 1)")
    p.add_argument("--session-id", type=int, default=0, help="first session id (ca)")
    p.add_argument("--timeout", type=float, default=wire.DEFAULT_TIMEOUT)
    p.add_argument("--tamper-x", type=int, default=0, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sep", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("roots", help="all k-th roots of a value modulo N")
    p.add_argument("--value", type=int, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_roots)

    p = sub.add_parser("table", help="table of k-th power residues and their roots")
    _add_common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("theorem", help="closed-form outcome distribution for degree k")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--check", action="store_true", help="compare against exhaustive enumeration")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_theorem)

    p = sub.add_parser("run", help="one in-process session")
    _add_common(p, protocol=True, seed=True)
    p.add_argument("--session-id", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("simulate", help="Monte Carlo sessions with a chi-square verdict")
    _add_common(p, protocol=True, seed=True)
    p.add_argument("--trials", type=int, default=60000)
    p.add_argument("--strict", action="store_true", help="require an explicit --seed")
    p.set_defaults(func=cmd_simulate)

    for name, roles in (("serve", ("ca", "re", "alice", "bob")), ("party", ("alice", "bob"))):
        p = sub.add_parser(name, help=f"host one role over TCP ({', '.join(roles)})")
        p.add_argument("--role", choices=roles, required=True)
        _add_common(p, protocol=True, seed=True)
        _add_network(p)
        p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except SEPError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

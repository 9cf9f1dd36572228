"""Framed binary messages and the transports that carry a session between roles.

Frame layout: ``u32 length | u8 tag | u64 session_id | u64 field...``, all
big-endian. The role classes below are transport-free state machines; the
loopback driver and the asyncio TCP servers both route encoded frames through
them, which is what makes transcripts transport-independent.
"""

from __future__ import annotations

import asyncio
import enum
import logging
import struct
from dataclasses import dataclass, field
from typing import Optional

from .errors import (
    OversizeFrame,
    SEPError,
    TransportFailure,
    TruncatedFrame,
    UnknownTag,
    WrongFieldCount,
)
from .modmath import Semiprime, powmod
from .protocol import (
    PartyResult,
    ProtocolParams,
    REPolicy,
    SessionTranscript,
    ca_setup,
    classify_outcome,
    derive_rng,
    party_finish,
    re_reply,
)
from .roots import validate_setup

log = logging.getLogger(__name__)

MAX_PAYLOAD = 4096
U64_MAX = 2**64 - 1
_LEN = struct.Struct(">I")
_HEAD = struct.Struct(">BQ")

ALICE_SLOT, BOB_SLOT = 0, 1
DEFAULT_TIMEOUT = 10.0


class MsgType(enum.IntEnum):
    INIT = 0x01
    SUBMIT = 0x02
    REPLY = 0x03
    REPORT = 0x04
    ERROR = 0x05


FIELDS = {
    MsgType.INIT: ("N", "k", "e", "ciphertext", "held_root"),
    MsgType.SUBMIT: ("party_slot", "N", "k", "x"),
    MsgType.REPLY: ("root",),
    # received/factor let CA assemble a full transcript; 0 means "none"
    MsgType.REPORT: ("found_flag", "recovered", "received", "factor"),
    MsgType.ERROR: ("code",),
}


class ErrorCode(enum.IntEnum):
    MISMATCH = 1
    DUPLICATE_SLOT = 2
    TIMEOUT = 3
    TRANSPORT = 4


@dataclass(frozen=True)
class Message:
    msg_type: MsgType
    session_id: int
    fields: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "msg_type", MsgType(self.msg_type))
        object.__setattr__(self, "fields", tuple(self.fields))
        names = FIELDS[self.msg_type]
        if len(self.fields) != len(names):
            raise WrongFieldCount(f"{self.msg_type.name} takes {len(names)} fields, got {len(self.fields)}")
        for v in (self.session_id, *self.fields):
            if not 0 <= v <= U64_MAX:
                raise ValueError(f"field value {v} does not fit in u64")

    def __getitem__(self, name: str) -> int:
        return self.fields[FIELDS[self.msg_type].index(name)]

    def as_dict(self) -> dict:
        return dict(zip(FIELDS[self.msg_type], self.fields))

    @classmethod
    def make(cls, msg_type: MsgType, session_id: int, **values: int) -> "Message":
        return cls(msg_type, session_id, tuple(values[n] for n in FIELDS[MsgType(msg_type)]))


def error(session_id: int, code: int) -> Message:
    return Message(MsgType.ERROR, session_id, (int(code),))


def encode(msg: Message) -> bytes:
    payload = _HEAD.pack(msg.msg_type, msg.session_id) + b"".join(struct.pack(">Q", v) for v in msg.fields)
    if len(payload) > MAX_PAYLOAD:
        raise OversizeFrame(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    return _LEN.pack(len(payload)) + payload


def decode_payload(payload: bytes) -> Message:
    if len(payload) < _HEAD.size:
        raise TruncatedFrame(f"payload of {len(payload)} bytes has no header")
    tag, session_id = _HEAD.unpack_from(payload)
    try:
        msg_type = MsgType(tag)
    except ValueError:
        raise UnknownTag(f"unknown message tag 0x{tag:02x}") from None
    body = payload[_HEAD.size:]
    if len(body) % 8 or len(body) // 8 != len(FIELDS[msg_type]):
        raise WrongFieldCount(f"{msg_type.name} body of {len(body)} bytes")
    fields = struct.unpack(f">{len(body) // 8}Q", body)
    return Message(msg_type, session_id, fields)


def decode(data: bytes) -> Message:
    """Parse exactly one frame."""
    if len(data) < _LEN.size:
        raise TruncatedFrame("missing length prefix")
    (length,) = _LEN.unpack_from(data)
    if length > MAX_PAYLOAD:
        raise OversizeFrame(f"declared length {length} exceeds {MAX_PAYLOAD}")
    payload = data[_LEN.size:]
    if len(payload) < length:
        raise TruncatedFrame(f"frame declares {length} bytes, {len(payload)} present")
    if len(payload) > length:
        raise TruncatedFrame(f"{len(payload) - length} trailing bytes after frame")
    return decode_payload(payload)


# -- transport-free roles -----------------------------------------------------


class CertificationAuthority:
    """Chooses params, issues INITs, and turns the two REPORTs into a transcript."""

    def __init__(self, s: Semiprime, k: int, e: int, m: int, seed: int):
        self.s, self.k, self.e, self.m, self.seed = s, k, e, m, seed

    def setup_session(self, session_id: int) -> tuple[ProtocolParams, Message, Message]:
        params = ca_setup(self.s, self.k, self.e, self.m, derive_rng(self.seed, session_id, "ca"))
        inits = [
            Message.make(
                MsgType.INIT, session_id, N=params.N, k=params.k, e=params.e, ciphertext=params.c, held_root=held
            )
            for held in (params.held_alice, params.held_bob)
        ]
        return params, inits[0], inits[1]

    def transcript(self, params: ProtocolParams, session_id: int, reports: tuple[Message, Message]) -> SessionTranscript:
        results = []
        for slot, report in enumerate(reports):
            if report.msg_type is MsgType.ERROR:
                raise TransportFailure(
                    f"session {session_id}: party {slot} reported error code {report['code']}", report["code"]
                )
            if report.msg_type is not MsgType.REPORT or report.session_id != session_id:
                raise TransportFailure(f"session {session_id}: unexpected {report.msg_type.name}")
            found = bool(report["found_flag"])
            results.append(
                PartyResult(
                    report["received"],
                    report["factor"] if found else None,
                    report["recovered"] if found else None,
                )
            )
        alice, bob = results
        return SessionTranscript(
            session_id,
            params,
            (alice.received, bob.received),
            alice,
            bob,
            classify_outcome(alice.outcome_bit, bob.outcome_bit),
            self.seed,
        )


@dataclass
class Party:
    """Alice (slot 0) or Bob (slot 1). ``tamper_x`` is a fault hook for tests."""

    slot: int
    tamper_x: int = 0
    _pending: dict = field(default_factory=dict)

    def on_init(self, msg: Message) -> Message:
        N, k = msg["N"], msg["k"]
        held = msg["held_root"]
        x = powmod(held, k, N)
        if self.tamper_x:
            x = (x + self.tamper_x) % N
        self._pending[msg.session_id] = (held, N, msg["e"], msg["ciphertext"])
        return Message.make(MsgType.SUBMIT, msg.session_id, party_slot=self.slot, N=N, k=k, x=x)

    def on_reply(self, msg: Message) -> Message:
        sid = msg.session_id
        held, N, e, c = self._pending.pop(sid)
        if msg.msg_type is MsgType.ERROR:
            return msg
        result = party_finish(held, msg["root"], N, e, c)
        found = result.factor_found is not None
        return Message.make(
            MsgType.REPORT,
            sid,
            found_flag=int(found),
            recovered=result.recovered or 0,
            received=result.received,
            factor=result.factor_found or 0,
        )

    def abandon(self, session_id: int, code: int) -> Message:
        self._pending.pop(session_id, None)
        return error(session_id, code)


class RootExtractor:
    """RE. Per session it keeps only the submitted (N, k, x) per slot, never held roots."""

    def __init__(self, s: Semiprime, seed: int):
        self.s = s
        self.seed = seed
        self._open: dict[int, dict[int, tuple[int, int, int]]] = {}
        self._closed: set[int] = set()

    def submit(self, msg: Message) -> Optional[dict[int, Message]]:
        """Register one SUBMIT. Returns None while waiting, else a message for each slot."""
        sid = msg.session_id
        slot = msg["party_slot"]
        if sid in self._closed:
            return {slot: error(sid, ErrorCode.DUPLICATE_SLOT)}
        state = self._open.setdefault(sid, {})
        if slot not in (ALICE_SLOT, BOB_SLOT) or slot in state:
            return self._fail(sid, ErrorCode.DUPLICATE_SLOT, extra_slot=slot)
        state[slot] = (msg["N"], msg["k"], msg["x"])
        if len(state) < 2:
            return None
        del self._open[sid]
        self._closed.add(sid)
        if state[ALICE_SLOT] != state[BOB_SLOT]:
            return {s: error(sid, ErrorCode.MISMATCH) for s in (ALICE_SLOT, BOB_SLOT)}
        N, k, x = state[ALICE_SLOT]
        try:
            if N != self.s.N:
                raise TransportFailure(f"submitted modulus {N} is not {self.s.N}")
            setup = validate_setup(k, self.s)
            pair = re_reply(x, setup, REPolicy.for_setup(setup), derive_rng(self.seed, sid, "re"))
        except SEPError as exc:
            log.warning("session %d rejected: %s", sid, exc)
            return {s: error(sid, ErrorCode.MISMATCH) for s in (ALICE_SLOT, BOB_SLOT)}
        return {ALICE_SLOT: Message.make(MsgType.REPLY, sid, root=pair[0]),
                BOB_SLOT: Message.make(MsgType.REPLY, sid, root=pair[1])}

    def _fail(self, sid: int, code: int, extra_slot: int) -> dict[int, Message]:
        slots = set(self._open.pop(sid, {})) | {extra_slot}
        self._closed.add(sid)
        return {s: error(sid, code) for s in slots}

    def expire(self, sid: int) -> dict[int, Message]:
        """Rendezvous timed out; every waiting slot gets ERROR 3."""
        slots = self._open.pop(sid, {})
        self._closed.add(sid)
        return {s: error(sid, ErrorCode.TIMEOUT) for s in slots}


# -- in-process loopback --------------------------------------------------------


class LoopbackNetwork:
    """Runs the four roles in one process, passing every message as encoded bytes.

    ``log`` records ``(sender, receiver, frame)`` for each hop.
    """

    def __init__(self, ca: CertificationAuthority, re: RootExtractor, alice: Party, bob: Party):
        self.ca, self.re = ca, re
        self.parties = (alice, bob)
        self.log: list[tuple[str, str, bytes]] = []

    def _send(self, src: str, dst: str, msg: Message) -> Message:
        frame = encode(msg)
        self.log.append((src, dst, frame))
        return decode(frame)

    def session_exchange(self, session_id: int) -> SessionTranscript:
        names = ("alice", "bob")
        params, *inits = self.ca.setup_session(session_id)
        submits = [
            self._send(names[slot], "re", party.on_init(self._send("ca", names[slot], inits[slot])))
            for slot, party in enumerate(self.parties)
        ]
        replies = None
        for msg in submits:
            replies = self.re.submit(msg) or replies
        if replies is None or len(replies) < 2:
            replies = {**self.re.expire(session_id), **(replies or {})}
        reports = []
        for slot, party in enumerate(self.parties):
            reply = self._send("re", names[slot], replies[slot])
            reports.append(self._send(names[slot], "ca", party.on_reply(reply)))
        return self.ca.transcript(params, session_id, tuple(reports))


# -- TCP ------------------------------------------------------------------------


def parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must look like HOST:PORT, got {text!r}")
    return host, int(port)


async def read_message(reader: asyncio.StreamReader) -> Optional[Message]:
    """Next frame from the stream, or None on clean EOF."""
    try:
        head = await reader.readexactly(_LEN.size)
    except asyncio.IncompleteReadError as exc:
        if exc.partial:
            raise TruncatedFrame("stream ended inside a length prefix") from None
        return None
    (length,) = _LEN.unpack(head)
    if length > MAX_PAYLOAD:
        raise OversizeFrame(f"declared length {length} exceeds {MAX_PAYLOAD}")
    try:
        payload = await reader.readexactly(length)
    except asyncio.IncompleteReadError:
        raise TruncatedFrame("stream ended inside a frame") from None
    return decode_payload(payload)


async def write_message(writer: asyncio.StreamWriter, msg: Message) -> None:
    writer.write(encode(msg))
    await writer.drain()


class _SessionCounter:
    """Resolves ``done`` once ``limit`` sessions finished (limit 0 = never)."""

    def __init__(self, limit: int):
        self.limit = limit
        self.count = 0
        self.done = asyncio.get_running_loop().create_future()

    def tick(self):
        self.count += 1
        if self.limit and self.count >= self.limit and not self.done.done():
            self.done.set_result(None)


async def _serve(handler, endpoint: str, sessions: int, ready: Optional[asyncio.Event] = None):
    counter = _SessionCounter(sessions)
    host, port = parse_endpoint(endpoint)
    server = await asyncio.start_server(lambda r, w: handler(r, w, counter), host, port)
    log.info("listening on %s", endpoint)
    if ready is not None:
        ready.set()
    async with server:
        await counter.done
        # let in-flight writes flush before tearing down
        await asyncio.sleep(0.05)


async def serve_root_extractor(
    endpoint: str, s: Semiprime, seed: int, sessions: int = 0, timeout: float = DEFAULT_TIMEOUT, ready=None
) -> None:
    re = RootExtractor(s, seed)
    waiters: dict[int, dict[int, asyncio.Future]] = {}
    finished: set[int] = set()

    def dispatch(sid: int, out: dict[int, Message], counter: _SessionCounter) -> None:
        slots = waiters.get(sid, {})
        for slot, msg in out.items():
            fut = slots.get(slot)
            if fut is not None and not fut.done():
                fut.set_result(msg)
        if slots and all(f.done() for f in slots.values()):
            del waiters[sid]
            if sid not in finished:
                finished.add(sid)
                counter.tick()

    async def handle(reader, writer, counter):
        try:
            while (msg := await read_message(reader)) is not None:
                sid = msg.session_id
                if msg.msg_type is not MsgType.SUBMIT:
                    await write_message(writer, error(sid, ErrorCode.TRANSPORT))
                    continue
                slot = msg["party_slot"]
                out = re.submit(msg) or {}
                slots = waiters.setdefault(sid, {})
                if slot in slots:
                    await write_message(writer, error(sid, ErrorCode.DUPLICATE_SLOT))
                    dispatch(sid, out, counter)
                    continue
                fut = slots[slot] = asyncio.get_running_loop().create_future()
                dispatch(sid, out, counter)
                try:
                    reply = await asyncio.wait_for(asyncio.shield(fut), timeout)
                except asyncio.TimeoutError:
                    dispatch(sid, re.expire(sid), counter)
                    if not fut.done():
                        fut.set_result(error(sid, ErrorCode.TIMEOUT))
                    reply = fut.result()
                await write_message(writer, reply)
        except (SEPError, ConnectionError) as exc:
            log.warning("RE connection dropped: %s", exc)
        finally:
            writer.close()

    await _serve(handle, endpoint, sessions, ready)


async def serve_party(
    endpoint: str, slot: int, re_endpoint: str, sessions: int = 0, timeout: float = DEFAULT_TIMEOUT,
    tamper_x: int = 0, ready=None,
) -> None:
    party = Party(slot, tamper_x)

    async def handle(reader, writer, counter):
        try:
            init = await read_message(reader)
            if init is None:
                return
            if init.msg_type is not MsgType.INIT:
                await write_message(writer, error(init.session_id, ErrorCode.TRANSPORT))
                return
            submit = party.on_init(init)
            try:
                reply = await asyncio.wait_for(_ask_re(re_endpoint, submit, timeout), timeout)
            except asyncio.TimeoutError:
                await write_message(writer, party.abandon(init.session_id, ErrorCode.TIMEOUT))
                return
            except (OSError, SEPError) as exc:
                log.warning("party %d could not reach RE: %s", slot, exc)
                await write_message(writer, party.abandon(init.session_id, ErrorCode.TRANSPORT))
                return
            await write_message(writer, party.on_reply(reply))
        except (SEPError, ConnectionError) as exc:
            log.warning("party %d connection dropped: %s", slot, exc)
        finally:
            writer.close()
            counter.tick()

    await _serve(handle, endpoint, sessions, ready)


async def _connect(endpoint: str, within: float):
    """Open a connection, retrying refusals so roles may start in any order."""
    host, port = parse_endpoint(endpoint)
    loop = asyncio.get_running_loop()
    deadline = loop.time() + within
    while True:
        try:
            return await asyncio.open_connection(host, port)
        except ConnectionRefusedError:
            if loop.time() >= deadline:
                raise
            await asyncio.sleep(0.05)


async def _ask_re(re_endpoint: str, submit: Message, timeout: float) -> Message:
    reader, writer = await _connect(re_endpoint, timeout)
    try:
        await write_message(writer, submit)
        reply = await read_message(reader)
        if reply is None:
            raise TransportFailure("RE closed the connection without replying", ErrorCode.TRANSPORT)
        return reply
    finally:
        writer.close()


async def _ask_party(endpoint: str, init: Message, timeout: float) -> Message:
    try:
        reader, writer = await asyncio.wait_for(_connect(endpoint, timeout), timeout)
    except (OSError, asyncio.TimeoutError) as exc:
        raise TransportFailure(f"cannot reach party at {endpoint}: {exc}", ErrorCode.TRANSPORT) from None
    try:
        await write_message(writer, init)
        # party waits up to `timeout` on RE, so allow it that long plus slack
        report = await asyncio.wait_for(read_message(reader), 2 * timeout + 1)
    except asyncio.TimeoutError:
        raise TransportFailure(f"no report from {endpoint}", ErrorCode.TIMEOUT) from None
    except (OSError, SEPError) as exc:
        raise TransportFailure(f"bad report from {endpoint}: {exc}", ErrorCode.TRANSPORT) from None
    finally:
        writer.close()
    if report is None:
        raise TransportFailure(f"{endpoint} closed without reporting", ErrorCode.TRANSPORT)
    return report


async def run_certification_authority(
    ca: CertificationAuthority,
    alice_endpoint: str,
    bob_endpoint: str,
    session_ids,
    timeout: float = DEFAULT_TIMEOUT,
) -> list[SessionTranscript]:
    """Drive each session over TCP; sessions run concurrently."""

    async def one(sid: int) -> SessionTranscript:
        params, init_a, init_b = ca.setup_session(sid)
        reports = await asyncio.gather(
            _ask_party(alice_endpoint, init_a, timeout), _ask_party(bob_endpoint, init_b, timeout)
        )
        return ca.transcript(params, sid, tuple(reports))

    return list(await asyncio.gather(*(one(sid) for sid in session_ids)))

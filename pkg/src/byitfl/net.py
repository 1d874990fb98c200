"""Deterministic synchronous network with private channels, ideal broadcast and
a full transcript of everything delivered."""

from __future__ import annotations

import json
import random
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

import numpy as np

FEDERATOR = 0
BROADCAST = -1


def _key_int(k) -> int:
    return zlib.crc32(k.encode()) if isinstance(k, str) else int(k)


def derive_seed(master: int, *key) -> int:
    """Independent 256-bit seed for the stream named by ``key`` (party, round, purpose, ...)."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(_key_int(k) for k in key))
    return int.from_bytes(ss.generate_state(4, dtype=np.uint64).tobytes(), "little")


def party_rng(master: int, *key) -> random.Random:
    return random.Random(derive_seed(master, *key))


def encode_payload(obj: Any) -> bytes:
    """Stable tag-length-value encoding of nested tuples/lists of ints, strs, None."""
    out = bytearray()
    _enc(obj, out)
    return bytes(out)


def _enc(obj, out: bytearray):
    if obj is None:
        out += b"n"
    elif isinstance(obj, bool):
        out += b"t" if obj else b"f"
    elif isinstance(obj, int):
        mag = abs(obj)
        raw = mag.to_bytes((mag.bit_length() + 7) // 8, "big")
        out += b"-" if obj < 0 else b"i"
        out += struct.pack(">H", len(raw)) + raw
    elif isinstance(obj, str):
        raw = obj.encode()
        out += b"s" + struct.pack(">I", len(raw)) + raw
    elif isinstance(obj, bytes):
        out += b"b" + struct.pack(">I", len(obj)) + obj
    elif isinstance(obj, (tuple, list)):
        out += b"l" + struct.pack(">I", len(obj))
        for x in obj:
            _enc(x, out)
    elif isinstance(obj, dict):
        out += b"d" + struct.pack(">I", len(obj))
        for k in sorted(obj):
            _enc(k, out)
            _enc(obj[k], out)
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def decode_payload(buf: bytes) -> Any:
    obj, off = _dec(buf, 0)
    if off != len(buf):
        raise ValueError("trailing bytes in payload")
    return obj


def _dec(buf: bytes, off: int):
    tag = buf[off : off + 1]
    off += 1
    if tag == b"n":
        return None, off
    if tag in (b"t", b"f"):
        return tag == b"t", off
    if tag in (b"i", b"-"):
        (n,) = struct.unpack_from(">H", buf, off)
        off += 2
        v = int.from_bytes(buf[off : off + n], "big")
        return (-v if tag == b"-" else v), off + n
    if tag in (b"s", b"b"):
        (n,) = struct.unpack_from(">I", buf, off)
        off += 4
        raw = buf[off : off + n]
        return (raw.decode() if tag == b"s" else bytes(raw)), off + n
    if tag == b"l":
        (n,) = struct.unpack_from(">I", buf, off)
        off += 4
        items = []
        for _ in range(n):
            x, off = _dec(buf, off)
            items.append(x)
        return tuple(items), off
    if tag == b"d":
        (n,) = struct.unpack_from(">I", buf, off)
        off += 4
        d = {}
        for _ in range(n):
            k, off = _dec(buf, off)
            v, off = _dec(buf, off)
            d[k] = v
        return d, off
    raise ValueError(f"bad payload tag {tag!r}")


@dataclass(frozen=True)
class Message:
    round: int
    phase: str
    sender: int
    receiver: int
    kind: str
    payload: Any


@dataclass(frozen=True)
class Record:
    round: int
    phase: str
    sender: int
    receiver: int
    kind: str
    payload: bytes


class Transcript:
    """Append-only log of delivered messages."""

    def __init__(self, records: Iterable[Record] = (), meta: dict | None = None):
        self.records: list[Record] = list(records)
        self.meta = dict(meta or {})

    def __len__(self):
        return len(self.records)

    def append(self, rec: Record):
        self.records.append(rec)

    def view_of(self, parties) -> list[Record]:
        """Messages received by ``parties`` (private ones addressed to them, plus broadcasts)."""
        parties = set(parties)
        if not parties:
            return []
        return [r for r in self.records if r.receiver in parties or r.receiver == BROADCAST]

    def to_bytes(self) -> bytes:
        out = bytearray(b"BYTR")
        for r in self.records:
            head = json.dumps([r.round, r.phase, r.sender, r.receiver, r.kind]).encode()
            out += struct.pack(">I", len(head)) + head + struct.pack(">I", len(r.payload)) + r.payload
        return bytes(out)

    @classmethod
    def from_bytes(cls, buf: bytes, meta: dict | None = None) -> "Transcript":
        if buf[:4] != b"BYTR":
            raise ValueError("not a transcript log")
        off, recs = 4, []
        while off < len(buf):
            (hl,) = struct.unpack_from(">I", buf, off)
            off += 4
            rnd, phase, snd, rcv, kind = json.loads(buf[off : off + hl])
            off += hl
            (pl,) = struct.unpack_from(">I", buf, off)
            off += 4
            recs.append(Record(rnd, phase, snd, rcv, kind, bytes(buf[off : off + pl])))
            off += pl
        return cls(recs, meta)

    def index(self) -> dict:
        kinds: dict[str, int] = {}
        for r in self.records:
            kinds[r.kind] = kinds.get(r.kind, 0) + 1
        return {"meta": self.meta, "records": len(self.records),
                "rounds": (self.records[-1].round if self.records else 0), "kinds": kinds}

    def export(self, prefix: str | Path):
        prefix = Path(prefix)
        prefix.with_suffix(".bin").write_bytes(self.to_bytes())
        prefix.with_suffix(".json").write_text(json.dumps(self.index(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, prefix: str | Path) -> "Transcript":
        prefix = Path(prefix)
        meta = json.loads(prefix.with_suffix(".json").read_text()).get("meta", {})
        return cls.from_bytes(prefix.with_suffix(".bin").read_bytes(), meta)


class Network:
    """Synchronous rounds: messages submitted during a round are delivered
    atomically by :meth:`deliver`. Silenced parties' submissions are dropped."""

    def __init__(self, parties: Iterable[int], record: bool = True):
        self.parties = sorted(parties)
        self.participants = [FEDERATOR] + [p for p in self.parties if p != FEDERATOR]
        self.round = 0
        self.phase = "init"
        self.record = record
        self.transcript = Transcript()
        self._pending: list[tuple[int, int, str, Any]] = []
        self._silenced: set[int] = set()

    def silence(self, party: int):
        self._silenced.add(party)

    def is_silenced(self, party: int) -> bool:
        return party in self._silenced

    @property
    def silenced(self) -> frozenset:
        return frozenset(self._silenced)

    def send(self, sender: int, receiver: int, kind: str, payload: Any):
        if sender in self._silenced:
            return
        if receiver not in self.participants:
            raise ValueError(f"unknown receiver {receiver}")
        self._pending.append((sender, receiver, kind, payload))

    def broadcast(self, sender: int, kind: str, payload: Any):
        if sender in self._silenced:
            return
        self._pending.append((sender, BROADCAST, kind, payload))

    def deliver(self) -> dict[int, list[Message]]:
        """Close the round. Returns one inbox per participant."""
        self.round += 1
        inboxes: dict[int, list[Message]] = {p: [] for p in self.participants}
        for sender, receiver, kind, payload in self._pending:
            msg = Message(self.round, self.phase, sender, receiver, kind, payload)
            if self.record:
                self.transcript.append(Record(self.round, self.phase, sender, receiver, kind,
                                              encode_payload(payload)))
            if receiver == BROADCAST:
                for p in self.participants:
                    inboxes[p].append(msg)
            else:
                inboxes[receiver].append(msg)
        self._pending = []
        return inboxes


def deliver_round(net: Network) -> dict[int, list[Message]]:
    return net.deliver()

"""In-process ledger hosting ACL records with smart-contract semantics.

One serialized writer applies owner-signed transactions in arrival order and
appends an immutable event per transaction. :func:`replay` rebuilds the record
state from the event log alone.
"""

from __future__ import annotations

import enum
import hashlib
import json
import threading
import time
from dataclasses import dataclass, field, replace
from typing import IO, Iterable

from .codec import pack
from .crypto_core import KeyPair, Signature, sign, verify
from .errors import BadSignature, DecodeError, DuplicateRecord, Unauthorized, UnknownRecord
from .groups import Point, Rng, make_rng
from .offchain_store import Digest, StorageRef
from .secret_sharing import ThresholdPolicy


class Scheme(str, enum.Enum):
    SS = "SS"
    PRE = "PRE"


@dataclass(frozen=True, order=True)
class Address:
    value: bytes

    def __post_init__(self):
        if len(self.value) != 20:
            raise DecodeError("addresses are 20 bytes")

    @classmethod
    def of(cls, public_key: Point) -> Address:
        return cls(hashlib.sha3_256(public_key.to_bytes()).digest()[-20:])

    def hex(self) -> str:
        return self.value.hex()

    def __str__(self) -> str:
        return "0x" + self.hex()


@dataclass(frozen=True)
class DataRecord:
    record_id: bytes
    owner: Address
    storage_ref: StorageRef
    digest: Digest
    scheme: Scheme
    policy: ThresholdPolicy
    acl: frozenset = field(default_factory=frozenset)
    created_at: int = 0


@dataclass(frozen=True)
class LedgerEvent:
    seq: int
    kind: str
    record_id: bytes
    subject: Address
    tx_signer: Address
    payload: tuple = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "kind": self.kind,
                "record_id": self.record_id.hex(),
                "subject": self.subject.hex(),
                "tx_signer": self.tx_signer.hex(),
                "payload": dict(self.payload),
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> LedgerEvent:
        obj = json.loads(line)
        return cls(
            obj["seq"],
            obj["kind"],
            bytes.fromhex(obj["record_id"]),
            Address(bytes.fromhex(obj["subject"])),
            Address(bytes.fromhex(obj["tx_signer"])),
            tuple(obj["payload"].items()),
        )


# --- transactions ---------------------------------------------------------


@dataclass(frozen=True)
class DeployTx:
    owner_pk: Point
    storage_ref: StorageRef
    digest: Digest
    scheme: Scheme
    policy: ThresholdPolicy
    nonce: bytes
    signature: Signature

    @staticmethod
    def message_for(owner_pk, storage_ref, digest, scheme, policy, nonce) -> bytes:
        return pack(
            b"deploy",
            owner_pk.to_bytes(),
            storage_ref.value,
            digest.to_bytes(),
            Scheme(scheme).value.encode(),
            policy.t.to_bytes(4, "big"),
            policy.n.to_bytes(4, "big"),
            nonce,
        )

    def message(self) -> bytes:
        return self.message_for(self.owner_pk, self.storage_ref, self.digest, self.scheme, self.policy, self.nonce)

    @classmethod
    def create(cls, owner: KeyPair, storage_ref, digest, scheme, policy, nonce: bytes | None = None, rng: Rng | None = None):
        nonce = nonce if nonce is not None else (rng or make_rng()).randbytes(16)
        scheme = Scheme(scheme)
        msg = cls.message_for(owner.public_key, storage_ref, digest, scheme, policy, nonce)
        return cls(owner.public_key, storage_ref, digest, scheme, policy, nonce, sign(owner.secret_key, msg, owner.group, rng))


@dataclass(frozen=True)
class AclTx:
    kind: str  # "grant" | "revoke"
    record_id: bytes
    subject: Address
    signer_pk: Point
    nonce: bytes
    signature: Signature

    @staticmethod
    def message_for(kind, record_id, subject, signer_pk, nonce) -> bytes:
        return pack(b"acl", kind.encode(), record_id, subject.value, signer_pk.to_bytes(), nonce)

    def message(self) -> bytes:
        return self.message_for(self.kind, self.record_id, self.subject, self.signer_pk, self.nonce)

    @classmethod
    def create(cls, signer: KeyPair, kind: str, record_id: bytes, subject: Address, rng: Rng | None = None):
        if kind not in ("grant", "revoke"):
            raise ValueError(f"unknown ACL operation {kind!r}")
        nonce = (rng or make_rng()).randbytes(16)
        msg = cls.message_for(kind, record_id, subject, signer.public_key, nonce)
        return cls(kind, record_id, subject, signer.public_key, nonce, sign(signer.secret_key, msg, signer.group, rng))


def record_id_for(owner: Address, storage_ref: StorageRef, nonce: bytes) -> bytes:
    return hashlib.sha256(owner.value + storage_ref.value + nonce).digest()


# --- ledger ---------------------------------------------------------------


class Ledger:
    def __init__(self, confirmation_delay: float = 0.0):
        self.confirmation_delay = confirmation_delay
        self._records: dict[bytes, DataRecord] = {}
        self._events: list[LedgerEvent] = []
        self._seen_tx: set[bytes] = set()
        self._write_lock = threading.Lock()

    def _append(self, kind, record_id, subject, signer, payload=()) -> LedgerEvent:
        ev = LedgerEvent(len(self._events) + 1, kind, record_id, subject, signer, tuple(payload))
        self._events.append(ev)
        return ev

    def _confirm(self) -> None:
        if self.confirmation_delay:
            time.sleep(self.confirmation_delay)

    def _check_sig(self, pk: Point, msg: bytes, sig: Signature) -> None:
        tx_hash = hashlib.sha256(msg + sig.value).digest()
        if tx_hash in self._seen_tx:
            raise BadSignature("transaction replayed")
        if not verify(pk, msg, sig):
            raise BadSignature("transaction signature does not verify")
        self._seen_tx.add(tx_hash)

    def deploy_record(self, tx: DeployTx) -> bytes:
        with self._write_lock:
            owner = Address.of(tx.owner_pk)
            record_id = record_id_for(owner, tx.storage_ref, tx.nonce)
            if record_id in self._records:
                raise DuplicateRecord(record_id.hex())
            self._check_sig(tx.owner_pk, tx.message(), tx.signature)
            self._confirm()
            seq = len(self._events) + 1
            self._records[record_id] = DataRecord(
                record_id, owner, tx.storage_ref, tx.digest, tx.scheme, tx.policy, frozenset(), seq
            )
            self._append(
                "Deploy", record_id, owner, owner,
                (
                    ("storage_ref", tx.storage_ref.hex()),
                    ("digest", tx.digest.to_bytes().hex()),
                    ("scheme", tx.scheme.value),
                    ("t", tx.policy.t),
                    ("n", tx.policy.n),
                ),
            )
            return record_id

    def _acl_update(self, tx: AclTx, kind: str) -> int:
        if tx.kind != kind:
            raise BadSignature(f"transaction is a {tx.kind}, not a {kind}")
        with self._write_lock:
            record = self._records.get(tx.record_id)
            if record is None:
                raise UnknownRecord(tx.record_id.hex())
            signer = Address.of(tx.signer_pk)
            if signer != record.owner:
                raise Unauthorized(f"{signer} does not own record {tx.record_id.hex()[:16]}")
            self._check_sig(tx.signer_pk, tx.message(), tx.signature)
            self._confirm()
            acl = record.acl | {tx.subject} if kind == "grant" else record.acl - {tx.subject}
            self._records[tx.record_id] = replace(record, acl=frozenset(acl))
            return self._append(kind.capitalize(), tx.record_id, tx.subject, signer).seq

    def grant(self, tx: AclTx) -> int:
        return self._acl_update(tx, "grant")

    def revoke(self, tx: AclTx) -> int:
        return self._acl_update(tx, "revoke")

    def get_record(self, record_id: bytes) -> DataRecord:
        try:
            return self._records[record_id]
        except KeyError:
            raise UnknownRecord(record_id.hex()) from None

    def is_authorized(self, record_id: bytes, consumer: Address) -> bool:
        return consumer in self.get_record(record_id).acl

    def events(self, record_id: bytes | None = None, from_seq: int = 1) -> list[LedgerEvent]:
        snapshot = self._events[max(from_seq, 1) - 1:]
        if record_id is None:
            return list(snapshot)
        return [e for e in snapshot if e.record_id == record_id]

    @property
    def head(self) -> int:
        return len(self._events)

    def state(self) -> dict[bytes, DataRecord]:
        return dict(self._records)


def replay(events: Iterable[LedgerEvent]) -> dict[bytes, DataRecord]:
    """Rebuild record state from an event log."""
    state: dict[bytes, DataRecord] = {}
    expected = 1
    for ev in events:
        if ev.seq != expected:
            raise DecodeError(f"event log gap at seq {expected}")
        expected += 1
        if ev.kind == "Deploy":
            p = dict(ev.payload)
            state[ev.record_id] = DataRecord(
                ev.record_id,
                ev.subject,
                StorageRef(bytes.fromhex(p["storage_ref"])),
                Digest.from_bytes(bytes.fromhex(p["digest"])),
                Scheme(p["scheme"]),
                ThresholdPolicy(p["t"], p["n"]),
                frozenset(),
                ev.seq,
            )
        elif ev.kind in ("Grant", "Revoke"):
            rec = state[ev.record_id]
            acl = rec.acl | {ev.subject} if ev.kind == "Grant" else rec.acl - {ev.subject}
            state[ev.record_id] = replace(rec, acl=frozenset(acl))
        else:
            raise DecodeError(f"unknown event kind {ev.kind!r}")
    return state


def export_events(events: Iterable[LedgerEvent], fh: IO[str]) -> None:
    for ev in events:
        fh.write(ev.to_json() + "\n")


def load_events(fh: IO[str]) -> list[LedgerEvent]:
    return [LedgerEvent.from_json(line) for line in fh if line.strip()]

"""Protocol messages exchanged with authorization nodes and their wire frames.

Frame layout: ``tag (1 byte) | length (4 bytes, big-endian) | body``. Bodies
are length-prefixed field concatenations (:mod:`pimsauth.codec`).
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass
from typing import Union

from ..codec import pack, read_u32, u32, unpack
from ..crypto_core import (
    Capsule,
    DemCiphertext,
    KeyPair,
    Signature,
    decode_public_key,
    encode_public_key,
    sign,
    verify,
)
from ..errors import DecodeError
from ..groups import Point, Rng, get_group, make_rng
from ..ledger import Scheme
from ..secret_sharing import CommitmentSet
from ..threshold_pre import CFrag

NONCE_SIZE = 16

TAG_REQUEST = 0x01
TAG_SHARE = 0x02
TAG_CFRAG = 0x03
TAG_DENIAL = 0x04
TAG_PROVISION = 0x05
TAG_ACK = 0x06

_HEADER = struct.Struct(">BI")


def encode_frame(tag: int, body: bytes) -> bytes:
    return _HEADER.pack(tag, len(body)) + body


def decode_frame(frame: bytes) -> tuple[int, bytes]:
    if len(frame) < _HEADER.size:
        raise DecodeError("short frame")
    tag, size = _HEADER.unpack_from(frame)
    body = frame[_HEADER.size:]
    if len(body) != size:
        raise DecodeError("frame length mismatch")
    return tag, body


def payload_aad(owner_pk: Point) -> bytes:
    """Associated data binding a DEM payload to its KEM key."""
    return pack(b"pimsauth/payload", owner_pk.to_bytes())


@dataclass(frozen=True)
class SealedPayload:
    """What the owner stores off-chain: KEM public key, capsule and DEM ciphertext."""

    owner_pk: Point
    capsule: Capsule
    ciphertext: DemCiphertext

    def to_bytes(self) -> bytes:
        return pack(encode_public_key(self.owner_pk), self.capsule.to_bytes(), self.ciphertext.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> SealedPayload:
        pk, capsule, ct = unpack(data, 3)
        owner_pk = decode_public_key(pk)
        return cls(owner_pk, Capsule.from_bytes(capsule, owner_pk.group), DemCiphertext.from_bytes(ct))


@dataclass(frozen=True)
class CapsuleEnvelope:
    record_id: bytes
    capsule: Capsule
    owner_pk: Point
    scheme: Scheme
    commitments: CommitmentSet | None = None

    def to_bytes(self) -> bytes:
        return pack(
            self.record_id,
            self.capsule.to_bytes(),
            encode_public_key(self.owner_pk),
            self.scheme.value.encode(),
            self.commitments.to_bytes() if self.commitments else b"",
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> CapsuleEnvelope:
        rid, capsule, pk, scheme, commitments = unpack(data, 5)
        owner_pk = decode_public_key(pk)
        g = owner_pk.group
        return cls(
            rid,
            Capsule.from_bytes(capsule, g),
            owner_pk,
            Scheme(scheme.decode()),
            CommitmentSet.from_bytes(commitments, g) if commitments else None,
        )


@dataclass(frozen=True)
class AccessRequest:
    record_id: bytes
    consumer_pk: Point
    nonce: bytes
    signature: Signature

    @staticmethod
    def message_for(record_id: bytes, consumer_pk: Point, nonce: bytes) -> bytes:
        return record_id + consumer_pk.to_bytes() + nonce

    def message(self) -> bytes:
        return self.message_for(self.record_id, self.consumer_pk, self.nonce)

    @classmethod
    def create(cls, consumer: KeyPair, record_id: bytes, rng: Rng | None = None) -> AccessRequest:
        rng = rng or make_rng()
        nonce = rng.randbytes(NONCE_SIZE)
        msg = cls.message_for(record_id, consumer.public_key, nonce)
        return cls(record_id, consumer.public_key, nonce, sign(consumer.secret_key, msg, consumer.group, rng))

    def verify(self) -> bool:
        return len(self.nonce) == NONCE_SIZE and verify(self.consumer_pk, self.message(), self.signature)

    def to_frame(self) -> bytes:
        body = pack(self.record_id, encode_public_key(self.consumer_pk), self.nonce, self.signature.value)
        return encode_frame(TAG_REQUEST, body)

    @classmethod
    def from_body(cls, body: bytes) -> AccessRequest:
        rid, pk, nonce, sig = unpack(body, 4)
        return cls(rid, decode_public_key(pk), nonce, Signature(sig))


class DenialReason(str, enum.Enum):
    BAD_SIGNATURE = "BadSignature"
    NOT_IN_ACL = "NotInAcl"
    UNKNOWN_RECORD = "UnknownRecord"
    NOT_PROVISIONED = "NotProvisioned"
    MALFORMED = "Malformed"


@dataclass(frozen=True)
class Denial:
    reason: DenialReason


@dataclass(frozen=True)
class EncryptedShare:
    ciphertext: bytes
    commitments: CommitmentSet


Payload = Union[EncryptedShare, CFrag, Denial]


@dataclass(frozen=True)
class NodeResponse:
    node_id: int
    payload: Payload

    @property
    def denied(self) -> bool:
        return isinstance(self.payload, Denial)

    def to_frame(self) -> bytes:
        p = self.payload
        if isinstance(p, EncryptedShare):
            return encode_frame(TAG_SHARE, pack(u32(self.node_id), p.ciphertext, p.commitments.to_bytes()))
        if isinstance(p, CFrag):
            return encode_frame(TAG_CFRAG, pack(u32(self.node_id), p.to_bytes()))
        return encode_frame(TAG_DENIAL, pack(u32(self.node_id), p.reason.value.encode()))

    @classmethod
    def from_frame(cls, frame: bytes) -> NodeResponse:
        tag, body = decode_frame(frame)
        if tag == TAG_SHARE:
            node_id, ct, commitments = unpack(body, 3)
            gid = unpack(commitments)[0].decode()
            return cls(read_u32(node_id), EncryptedShare(ct, CommitmentSet.from_bytes(commitments, get_group(gid))))
        if tag == TAG_CFRAG:
            node_id, raw = unpack(body, 2)
            return cls(read_u32(node_id), CFrag.from_bytes(raw))
        if tag == TAG_DENIAL:
            node_id, reason = unpack(body, 2)
            return cls(read_u32(node_id), Denial(DenialReason(reason.decode())))
        raise DecodeError(f"unexpected response tag {tag:#x}")


@dataclass(frozen=True)
class ProvisionMessage:
    """Owner-signed delivery of one node's threshold material."""

    record_id: bytes
    node_id: int
    envelope: CapsuleEnvelope
    consumer_pk: Point | None
    sealed_material: bytes
    signer_pk: Point
    signature: Signature

    @staticmethod
    def message_for(record_id, node_id, envelope, consumer_pk, sealed_material, signer_pk) -> bytes:
        return pack(
            b"provision",
            record_id,
            u32(node_id),
            envelope.to_bytes(),
            consumer_pk.to_bytes() if consumer_pk is not None else b"",
            sealed_material,
            signer_pk.to_bytes(),
        )

    def message(self) -> bytes:
        return self.message_for(
            self.record_id, self.node_id, self.envelope, self.consumer_pk, self.sealed_material, self.signer_pk
        )

    @classmethod
    def create(cls, owner: KeyPair, record_id, node_id, envelope, consumer_pk, sealed_material, rng=None):
        msg = cls.message_for(record_id, node_id, envelope, consumer_pk, sealed_material, owner.public_key)
        return cls(
            record_id, node_id, envelope, consumer_pk, sealed_material, owner.public_key,
            sign(owner.secret_key, msg, owner.group, rng),
        )

    def to_frame(self) -> bytes:
        body = pack(
            self.record_id,
            u32(self.node_id),
            self.envelope.to_bytes(),
            encode_public_key(self.consumer_pk) if self.consumer_pk is not None else b"",
            self.sealed_material,
            encode_public_key(self.signer_pk),
            self.signature.value,
        )
        return encode_frame(TAG_PROVISION, body)

    @classmethod
    def from_body(cls, body: bytes) -> ProvisionMessage:
        rid, node_id, env, cpk, material, spk, sig = unpack(body, 7)
        return cls(
            rid,
            read_u32(node_id),
            CapsuleEnvelope.from_bytes(env),
            decode_public_key(cpk) if cpk else None,
            material,
            decode_public_key(spk),
            Signature(sig),
        )


@dataclass(frozen=True)
class Ack:
    node_id: int
    record_id: bytes
    ok: bool
    reason: str = ""

    def to_frame(self) -> bytes:
        return encode_frame(TAG_ACK, pack(u32(self.node_id), self.record_id, b"\x01" if self.ok else b"\x00", self.reason.encode()))

    @classmethod
    def from_frame(cls, frame: bytes) -> Ack:
        tag, body = decode_frame(frame)
        if tag != TAG_ACK:
            raise DecodeError(f"expected an ack frame, got tag {tag:#x}")
        node_id, rid, ok, reason = unpack(body, 4)
        return cls(read_u32(node_id), rid, ok == b"\x01", reason.decode())


def material_aad(record_id: bytes, node_id: int) -> bytes:
    return pack(b"pimsauth/material", record_id, u32(node_id))

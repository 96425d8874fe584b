"""Hybrid KEM/DEM cryptosystem and Schnorr signatures over a prime-order group.

The KEM produces a :class:`Capsule` of two ephemeral points ``E = g*r``,
``V = g*u`` and a binding scalar ``s = u + r*H(E, V)``. The content key is
``KDF(pk * (r + u))``, so the owner opens it with ``(E + V) * sk`` and a
threshold of proxies can transform ``E`` and ``V`` towards a consumer without
touching the payload.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .codec import pack, unpack
from .errors import (
    AuthenticationFailure,
    CapsuleCheckFailure,
    DecodeError,
    InvalidParams,
)
from .groups import DEFAULT_GROUP, GroupParams, Point, Rng, get_group, make_rng

NONCE_SIZE = 12
TAG_SIZE = 16
KEY_SIZE = 32


class KeyRole(str, enum.Enum):
    OWNER_KEM = "owner_kem"
    CONSUMER = "consumer"
    NODE_IDENTITY = "node_identity"
    ACCOUNT = "account"


@dataclass(frozen=True)
class KeyPair:
    secret_key: int = field(repr=False)
    public_key: Point
    role: KeyRole = KeyRole.CONSUMER

    @property
    def group(self) -> GroupParams:
        return self.public_key.group


def generate_keypair(
    params: GroupParams = DEFAULT_GROUP,
    seed: bytes | None = None,
    role: KeyRole = KeyRole.CONSUMER,
    rng: Rng | None = None,
) -> KeyPair:
    """Fresh keypair; deterministic when ``seed`` is supplied."""
    if not isinstance(params, GroupParams):
        raise InvalidParams("params must be a GroupParams instance")
    if rng is None:
        rng = make_rng(seed)
    sk = params.random_scalar(rng)
    return KeyPair(sk, params.base_mul(sk), KeyRole(role))


@dataclass(frozen=True)
class SymmetricKey:
    value: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.value) != KEY_SIZE:
            raise InvalidParams("symmetric keys are exactly 32 bytes")


# --- DEM ------------------------------------------------------------------


@dataclass(frozen=True)
class DemCiphertext:
    nonce: bytes
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return pack(self.nonce, self.body, self.tag)

    @classmethod
    def from_bytes(cls, data: bytes) -> DemCiphertext:
        nonce, body, tag = unpack(data, 3)
        if len(nonce) != NONCE_SIZE or len(tag) != TAG_SIZE:
            raise DecodeError("bad DEM ciphertext layout")
        return cls(nonce, body, tag)


def dem_encrypt(
    k: SymmetricKey, plaintext: bytes, aad: bytes | None = None, rng: Rng | None = None
) -> DemCiphertext:
    nonce = rng.randbytes(NONCE_SIZE) if rng is not None else make_rng().randbytes(NONCE_SIZE)
    out = AESGCM(k.value).encrypt(nonce, bytes(plaintext), aad)
    return DemCiphertext(nonce, out[:-TAG_SIZE], out[-TAG_SIZE:])


def dem_decrypt(k: SymmetricKey, c: DemCiphertext, aad: bytes | None = None) -> bytes:
    try:
        return AESGCM(k.value).decrypt(c.nonce, c.body + c.tag, aad)
    except (InvalidTag, ValueError) as exc:
        raise AuthenticationFailure("DEM authentication failed") from exc


# --- KEM ------------------------------------------------------------------


def kdf(point: Point, label: bytes = b"kem") -> SymmetricKey:
    h = hashlib.sha256(pack(b"pimsauth/kdf", label, point.to_bytes()))
    return SymmetricKey(h.digest())


@dataclass(frozen=True, eq=False)
class Capsule:
    e: Point
    v: Point
    check: int

    @property
    def group(self) -> GroupParams:
        return self.e.group

    @property
    def points(self) -> tuple[Point, Point]:
        return (self.e, self.v)

    def challenge(self) -> int:
        return self.group.hash_to_scalar(b"capsule", self.e.to_bytes(), self.v.to_bytes())

    def verify(self) -> bool:
        """``g*s == V + E*h``; needs only public group parameters."""
        g = self.group
        if self.e.is_identity() or self.v.is_identity():
            return False
        lhs = g.base_mul(self.check)
        return lhs == g.multi_mul([(self.v, 1), (self.e, self.challenge())])

    def to_bytes(self) -> bytes:
        g = self.group
        return self.e.to_bytes() + self.v.to_bytes() + g.encode_scalar(self.check)

    @classmethod
    def from_bytes(cls, data: bytes, group: GroupParams = DEFAULT_GROUP) -> Capsule:
        w = group.element_size
        if len(data) != 2 * w + group.scalar_size:
            raise DecodeError("bad capsule width")
        return cls(
            group.decode_point(data[:w]),
            group.decode_point(data[w:2 * w]),
            group.decode_scalar(data[2 * w:]),
        )

    @staticmethod
    def size(group: GroupParams = DEFAULT_GROUP) -> int:
        return 2 * group.element_size + group.scalar_size

    def __eq__(self, other) -> bool:
        return isinstance(other, Capsule) and self.to_bytes() == other.to_bytes()

    def __hash__(self) -> int:
        return hash(self.to_bytes())


def kem_encapsulate(pk_kem: Point, rng: Rng | None = None) -> tuple[SymmetricKey, Capsule]:
    if not isinstance(pk_kem, Point) or pk_kem.is_identity():
        raise InvalidParams("invalid public key")
    g = pk_kem.group
    r = g.random_scalar(rng)
    u = g.random_scalar(rng)
    e, v = g.base_mul(r), g.base_mul(u)
    capsule = Capsule(e, v, 0)
    s = (u + r * capsule.challenge()) % g.order
    capsule = Capsule(e, v, s)
    return kdf(pk_kem * (r + u)), capsule


def kem_decapsulate(sk_kem: int, capsule: Capsule) -> SymmetricKey:
    if not capsule.verify():
        raise CapsuleCheckFailure("capsule self-check failed")
    return kdf((capsule.e + capsule.v) * sk_kem)


# --- hybrid convenience: encrypt a short message to a public key -------------


def hybrid_encrypt(pk: Point, plaintext: bytes, aad: bytes = b"", rng: Rng | None = None) -> bytes:
    key, capsule = kem_encapsulate(pk, rng)
    return pack(capsule.to_bytes(), dem_encrypt(key, plaintext, aad, rng).to_bytes())


def hybrid_decrypt(sk: int, group: GroupParams, blob: bytes, aad: bytes = b"") -> bytes:
    raw_capsule, raw_ct = unpack(blob, 2)
    capsule = Capsule.from_bytes(raw_capsule, group)
    return dem_decrypt(kem_decapsulate(sk, capsule), DemCiphertext.from_bytes(raw_ct), aad)


# --- signatures -----------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    value: bytes

    def __bytes__(self) -> bytes:
        return self.value


def _sig_challenge(g: GroupParams, r_bytes: bytes, pk: Point, message: bytes) -> int:
    return g.hash_to_scalar(b"schnorr", r_bytes, pk.to_bytes(), message)


def sign(
    sk: int, message: bytes, group: GroupParams = DEFAULT_GROUP, rng: Rng | None = None
) -> Signature:
    """Schnorr signature ``(R, s)`` with a hedged nonce."""
    extra = (rng or make_rng()).randbytes(32)
    k = group.hash_to_scalar(b"schnorr-nonce", group.encode_scalar(sk), message, extra) or 1
    r_bytes = group.base_mul(k).to_bytes()
    pk = group.base_mul(sk)
    s = (k + _sig_challenge(group, r_bytes, pk, message) * sk) % group.order
    return Signature(r_bytes + group.encode_scalar(s))


def verify(pk: Point, message: bytes, sig: Signature) -> bool:
    g = pk.group
    raw = sig.value if isinstance(sig, Signature) else bytes(sig)
    if len(raw) != g.element_size + g.scalar_size or pk.is_identity():
        return False
    r_bytes = raw[:g.element_size]
    try:
        r = g.decode_point(r_bytes)
        s = g.decode_scalar(raw[g.element_size:])
    except DecodeError:
        return False
    e = _sig_challenge(g, r_bytes, pk, message)
    return g.multi_mul([(g.generator, s), (pk, -e)]) == r


def encode_public_key(pk: Point) -> bytes:
    return pack(pk.group.group_id.encode(), pk.to_bytes())


def decode_public_key(data: bytes) -> Point:
    gid, raw = unpack(data, 2)
    return get_group(gid.decode()).decode_point(raw)

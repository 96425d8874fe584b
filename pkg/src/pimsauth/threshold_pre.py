"""Split-key, uni-directional threshold proxy re-encryption over :class:`Capsule`.

The owner Shamir-shares ``sk_O / d`` where ``d`` is a Diffie-Hellman secret
between an ephemeral precursor ``X = g*x`` and the consumer key. Each proxy
raises the capsule points to its fragment; the consumer recomputes ``d`` with
``sk_C``, interpolates ``t`` fragments in the exponent and opens the capsule.

KFrags carry a commitment ``U*rk`` and the owner's signature. CFrags carry a
Chaum-Pedersen style proof that the same ``rk`` was applied to ``E``, ``V``
and ``U``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from .codec import pack, unpack
from .crypto_core import Capsule, Signature, SymmetricKey, kdf, sign, verify
from .errors import (
    CapsuleCheckFailure,
    CombineVerificationFailure,
    DecodeError,
    DuplicateFragment,
    InsufficientFragments,
    InvalidCFrag,
    InvalidKFrag,
)
from .groups import GroupParams, Point, Rng, get_group, lagrange_at_zero, make_rng
from .secret_sharing import ThresholdPolicy, eval_poly


@lru_cache(maxsize=None)
def commitment_base(group: GroupParams) -> Point:
    """Second generator ``U`` with unknown discrete log relative to ``g``."""
    u = group.hash_to_point(b"pre/U")
    if hasattr(group, "precompute"):
        group.precompute(u)
    return u


def _kfrag_message(kfrag_id: int, pk_c: Point, commitment: Point, precursor: Point) -> bytes:
    g = pk_c.group
    return pack(b"kfrag", g.encode_scalar(kfrag_id), pk_c.to_bytes(), commitment.to_bytes(), precursor.to_bytes())


@dataclass(frozen=True)
class KFrag:
    id: int
    value: int
    precursor: Point
    commitment: Point
    signature: Signature

    @property
    def group(self) -> GroupParams:
        return self.precursor.group

    @property
    def proof(self) -> bytes:
        return self.commitment.to_bytes() + self.signature.value

    def to_bytes(self) -> bytes:
        g = self.group
        return pack(
            g.group_id.encode(),
            g.encode_scalar(self.id),
            g.encode_scalar(self.value),
            self.precursor.to_bytes(),
            self.commitment.to_bytes(),
            self.signature.value,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> KFrag:
        gid, kid, value, precursor, commitment, sig = unpack(data, 6)
        g = get_group(gid.decode())
        return cls(
            g.decode_scalar(kid),
            g.decode_scalar(value),
            g.decode_point(precursor),
            g.decode_point(commitment),
            Signature(sig),
        )


@dataclass(frozen=True)
class CFragProof:
    e2: Point
    v2: Point
    u2: Point
    u1: Point
    z3: int
    kfrag_signature: Signature


@dataclass(frozen=True)
class CFrag:
    e1: Point
    v1: Point
    kfrag_id: int
    precursor: Point
    proof: CFragProof

    @property
    def group(self) -> GroupParams:
        return self.e1.group

    @property
    def transformed_points(self) -> tuple[Point, Point]:
        return (self.e1, self.v1)

    def to_bytes(self) -> bytes:
        g = self.group
        p = self.proof
        return pack(
            g.group_id.encode(),
            self.e1.to_bytes(),
            self.v1.to_bytes(),
            g.encode_scalar(self.kfrag_id),
            self.precursor.to_bytes(),
            p.e2.to_bytes(),
            p.v2.to_bytes(),
            p.u2.to_bytes(),
            p.u1.to_bytes(),
            g.encode_scalar(p.z3),
            p.kfrag_signature.value,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> CFrag:
        gid, e1, v1, kid, x, e2, v2, u2, u1, z3, sig = unpack(data, 11)
        g = get_group(gid.decode())
        pt = g.decode_point
        return cls(
            pt(e1), pt(v1), g.decode_scalar(kid), pt(x),
            CFragProof(pt(e2), pt(v2), pt(u2), pt(u1), g.decode_scalar(z3), Signature(sig)),
        )


def _dh_terms(precursor: Point, pk_c: Point, dh: Point) -> tuple[bytes, bytes, bytes]:
    return precursor.to_bytes(), pk_c.to_bytes(), dh.to_bytes()


def _share_index(g: GroupParams, terms, kfrag_id: int) -> int:
    return g.hash_to_scalar(b"pre/share-index", *terms, g.encode_scalar(kfrag_id))


def generate_kfrags(
    sk_o: int,
    pk_c: Point,
    policy: ThresholdPolicy,
    rng_seed=None,
    *,
    rng: Rng | None = None,
) -> list[KFrag]:
    """Split the owner-to-consumer re-encryption key into ``policy.n`` fragments."""
    if not isinstance(policy, ThresholdPolicy):
        policy = ThresholdPolicy(*policy)
    g = pk_c.group
    q = g.order
    rng = rng or make_rng(rng_seed)
    u = commitment_base(g)

    x = g.random_scalar(rng)
    precursor = g.base_mul(x)
    terms = _dh_terms(precursor, pk_c, pk_c * x)
    d = g.hash_to_scalar(b"pre/d", *terms)
    coefficients = [sk_o * pow(d, -1, q) % q] + [g.random_scalar(rng) for _ in range(policy.t - 1)]

    kfrags = []
    seen = set()
    while len(kfrags) < policy.n:
        kid = g.random_scalar(rng)
        if kid in seen:
            continue
        seen.add(kid)
        rk = eval_poly(coefficients, _share_index(g, terms, kid), q)
        commitment = u * rk
        sig = sign(sk_o, _kfrag_message(kid, pk_c, commitment, precursor), g, rng)
        kfrags.append(KFrag(kid, rk, precursor, commitment, sig))
    return kfrags


def verify_kfrag(kfrag: KFrag, pk_o: Point, pk_c: Point, params: GroupParams | None = None) -> bool:
    g = params or pk_o.group
    if kfrag.group is not g or pk_c.group is not g:
        return False
    if commitment_base(g) * kfrag.value != kfrag.commitment:
        return False
    return verify(pk_o, _kfrag_message(kfrag.id, pk_c, kfrag.commitment, kfrag.precursor), kfrag.signature)


def _proof_challenge(g: GroupParams, capsule: Capsule, e1, e2, v1, v2, u1, u2) -> int:
    pts = (capsule.e, e1, e2, capsule.v, v1, v2, commitment_base(g), u1, u2)
    return g.hash_to_scalar(b"pre/cfrag-proof", *(p.to_bytes() for p in pts))


def reencrypt(kfrag: KFrag, capsule: Capsule, rng: Rng | None = None, *, check_capsule: bool = True) -> CFrag:
    """Transform the capsule points with one fragment. Never sees the payload."""
    if check_capsule and not capsule.verify():
        raise CapsuleCheckFailure("capsule self-check failed")
    g = capsule.group
    if kfrag.group is not g or commitment_base(g) * kfrag.value != kfrag.commitment:
        raise InvalidKFrag("kfrag value does not match its commitment")
    rk = kfrag.value
    e1, v1 = capsule.e * rk, capsule.v * rk
    blind = g.random_scalar(rng)
    e2, v2, u2 = capsule.e * blind, capsule.v * blind, commitment_base(g) * blind
    h = _proof_challenge(g, capsule, e1, e2, v1, v2, kfrag.commitment, u2)
    z3 = (blind + h * rk) % g.order
    proof = CFragProof(e2, v2, u2, kfrag.commitment, z3, kfrag.signature)
    return CFrag(e1, v1, kfrag.id, kfrag.precursor, proof)


def verify_cfrag(cfrag: CFrag, capsule: Capsule, pk_o: Point, pk_c: Point) -> bool:
    g = capsule.group
    if cfrag.group is not g or pk_o.group is not g or pk_c.group is not g:
        return False
    p = cfrag.proof
    h = _proof_challenge(g, capsule, cfrag.e1, p.e2, cfrag.v1, p.v2, p.u1, p.u2)
    checks = (
        (capsule.e, cfrag.e1, p.e2),
        (capsule.v, cfrag.v1, p.v2),
        (commitment_base(g), p.u1, p.u2),
    )
    for base, image, blinded in checks:
        if g.multi_mul([(base, p.z3), (image, -h)]) != blinded:
            return False
    msg = _kfrag_message(cfrag.kfrag_id, pk_c, p.u1, cfrag.precursor)
    return verify(pk_o, msg, p.kfrag_signature)


def combine_and_decapsulate(
    sk_c: int,
    pk_o: Point,
    capsule: Capsule,
    cfrags: Iterable[CFrag],
    threshold: int,
    *,
    check: bool = True,
) -> SymmetricKey:
    """Interpolate ``threshold`` verified cfrags and open the capsule.

    With ``check=False`` the caller vouches that every cfrag already passed
    :func:`verify_cfrag` (the client verifies eagerly as responses arrive).
    """
    g = capsule.group
    q = g.order
    cfrags = list(cfrags)
    ids = [c.kfrag_id for c in cfrags]
    if len(set(ids)) != len(ids):
        raise DuplicateFragment("two cfrags from the same kfrag")
    if len(cfrags) < threshold or threshold < 1:
        raise InsufficientFragments(f"need {threshold} cfrags, got {len(cfrags)}")
    if not capsule.verify():
        raise CapsuleCheckFailure("capsule self-check failed")
    pk_c = g.base_mul(sk_c)
    if check:
        for c in cfrags:
            if not verify_cfrag(c, capsule, pk_o, pk_c):
                raise InvalidCFrag(f"cfrag {c.kfrag_id:x} failed verification")
    chosen = sorted(cfrags, key=lambda c: c.kfrag_id)[:threshold]
    precursor = chosen[0].precursor
    if any(c.precursor != precursor for c in chosen):
        raise InvalidCFrag("cfrags come from different re-encryption keys")

    terms = _dh_terms(precursor, pk_c, precursor * sk_c)
    xs = [_share_index(g, terms, c.kfrag_id) for c in chosen]
    lambdas = [lagrange_at_zero(xs, i, q) for i in range(len(xs))]
    e_prime = g.multi_mul(zip((c.e1 for c in chosen), lambdas))
    v_prime = g.multi_mul(zip((c.v1 for c in chosen), lambdas))
    d = g.hash_to_scalar(b"pre/d", *terms)

    # E'*h + V' must equal pk_O * (s / d); catches wrong or mixed fragments, not the capsule addressee
    lhs = pk_o * (capsule.check * pow(d, -1, q))
    if lhs != g.multi_mul([(e_prime, capsule.challenge()), (v_prime, 1)]):
        raise CombineVerificationFailure("re-encrypted capsule does not match the owner key")
    return kdf((e_prime + v_prime) * d)


def decode_kfrag(data: bytes) -> KFrag:
    try:
        return KFrag.from_bytes(data)
    except (DecodeError, UnicodeDecodeError) as exc:
        raise InvalidKFrag("malformed kfrag") from exc

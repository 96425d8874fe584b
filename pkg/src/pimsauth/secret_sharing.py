"""Shamir (t, n) sharing of a scalar with Feldman commitments.

Field arithmetic is done modulo the group order, so the production curve and
the toy group (order 257) run through the same code.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable, Sequence

from .codec import pack, unpack
from .errors import DecodeError, DuplicateIndex, InsufficientShares, InvalidPolicy
from .groups import DEFAULT_GROUP, GroupParams, Point, lagrange_at_zero, make_rng


@dataclass(frozen=True)
class ThresholdPolicy:
    t: int
    n: int

    def __post_init__(self):
        if not (isinstance(self.t, int) and isinstance(self.n, int)):
            raise InvalidPolicy("t and n must be integers")
        if self.n < 1 or self.t < 1 or self.t > self.n:
            raise InvalidPolicy(f"need 1 <= t <= n, got t={self.t}, n={self.n}")


@dataclass(frozen=True)
class Share:
    index: int
    value: int
    commitment_set_id: bytes = b""

    def to_bytes(self, group: GroupParams = DEFAULT_GROUP) -> bytes:
        return self.index.to_bytes(4, "big") + group.encode_scalar(self.value)

    @classmethod
    def from_bytes(cls, data: bytes, group: GroupParams = DEFAULT_GROUP, commitment_set_id: bytes = b"") -> Share:
        if len(data) != 4 + group.scalar_size:
            raise DecodeError("bad share width")
        return cls(int.from_bytes(data[:4], "big"), group.decode_scalar(data[4:]), commitment_set_id)


@dataclass(frozen=True)
class CommitmentSet:
    id: bytes
    commitments: tuple[Point, ...]

    @property
    def group(self) -> GroupParams:
        return self.commitments[0].group

    @property
    def public_key(self) -> Point:
        return self.commitments[0]

    @staticmethod
    def derive_id(commitments: Sequence[Point]) -> bytes:
        return hashlib.sha256(pack(b"commitments", *(c.to_bytes() for c in commitments))).digest()

    @classmethod
    def from_commitments(cls, commitments: Sequence[Point]) -> CommitmentSet:
        commitments = tuple(commitments)
        return cls(cls.derive_id(commitments), commitments)

    def to_bytes(self) -> bytes:
        return pack(self.group.group_id.encode(), *(c.to_bytes() for c in self.commitments))

    @classmethod
    def from_bytes(cls, data: bytes, group: GroupParams) -> CommitmentSet:
        gid, *raw = unpack(data)
        if gid.decode() != group.group_id or not raw:
            raise DecodeError("commitment set for another group")
        return cls.from_commitments([group.decode_point(r) for r in raw])


def eval_poly(coefficients: Sequence[int], x: int, q: int) -> int:
    acc = 0
    for c in reversed(coefficients):
        acc = (acc * x + c) % q
    return acc


def split_secret(
    secret: int,
    policy: ThresholdPolicy,
    group: GroupParams = DEFAULT_GROUP,
    rng_seed=None,
    *,
    coefficients: Sequence[int] | None = None,
    rng=None,
) -> tuple[list[Share], CommitmentSet]:
    """Evaluate a random degree ``t-1`` polynomial with ``f(0) = secret`` at 1..n.

    ``coefficients`` pins the non-constant terms (golden vectors only).
    """
    q = group.order
    if not 0 <= secret < q:
        raise InvalidPolicy("secret must lie in [0, q-1]")
    if coefficients is None:
        rng = rng or make_rng(rng_seed)
        coefficients = [rng.randrange(q) for _ in range(policy.t - 1)]
    elif len(coefficients) != policy.t - 1:
        raise InvalidPolicy("need exactly t-1 forced coefficients")
    poly = [secret, *(c % q for c in coefficients)]
    commitments = CommitmentSet.from_commitments([group.base_mul(c) for c in poly])
    shares = [Share(i, eval_poly(poly, i, q), commitments.id) for i in range(1, policy.n + 1)]
    return shares, commitments


def _check_distinct(shares: Sequence[Share]) -> None:
    seen = set()
    for s in shares:
        if s.index in seen:
            raise DuplicateIndex(f"share index {s.index} given twice")
        seen.add(s.index)


def reconstruct_secret(shares: Iterable[Share], policy: ThresholdPolicy, group_or_modulus=DEFAULT_GROUP) -> int:
    """Lagrange interpolation at zero over the ``t`` lowest-index shares."""
    q = group_or_modulus if isinstance(group_or_modulus, int) else group_or_modulus.order
    shares = list(shares)
    _check_distinct(shares)
    if len(shares) < policy.t:
        raise InsufficientShares(f"need {policy.t} shares, got {len(shares)}")
    chosen = sorted(shares, key=lambda s: s.index)[:policy.t]
    xs = [s.index for s in chosen]
    return sum(s.value * lagrange_at_zero(xs, i, q) for i, s in enumerate(chosen)) % q


def verify_share(share: Share, commitments: CommitmentSet) -> bool:
    """Check ``g*value == sum_j C_j * index**j``."""
    g = commitments.group
    q = g.order
    if not 0 <= share.value < q or share.index < 1:
        return False
    if share.commitment_set_id and share.commitment_set_id != commitments.id:
        return False
    pairs = [(c, pow(share.index, j, q)) for j, c in enumerate(commitments.commitments)]
    pairs.append((g.generator, -share.value))
    return g.multi_mul(pairs).is_identity()

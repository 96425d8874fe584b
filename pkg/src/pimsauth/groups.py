"""Prime-order groups written additively.

Two implementations share one interface:

* :data:`SECP256K1` -- the production elliptic-curve group (256-bit order).
* :class:`SchnorrGroup` -- the order-``q`` subgroup of ``Z_p^*``; used with tiny
  primes (see :data:`TOY257`) so threshold arithmetic can be checked by hand.

Elements are :class:`Point` objects supporting ``+``, ``-`` and multiplication
by an integer scalar. Scalars are plain ``int`` values reduced mod ``order``.
"""

from __future__ import annotations

import hashlib
import random
import secrets
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpz

from .codec import pack
from .errors import DecodeError, InvalidParams

Rng = random.Random


def make_rng(seed: bytes | int | str | None = None) -> Rng:
    """Seeded, reproducible RNG when ``seed`` is given, OS entropy otherwise.

    Seeded generators are for reproducible tests and benchmarks only.
    """
    if seed is None:
        return secrets.SystemRandom()
    if isinstance(seed, str):
        seed = seed.encode()
    if isinstance(seed, int):
        seed = seed.to_bytes((seed.bit_length() + 8) // 8, "big", signed=True)
    return random.Random(hashlib.sha256(b"pimsauth-rng" + seed).digest())


class Point:
    __slots__ = ("group", "_raw", "_enc")

    def __init__(self, group: GroupParams, raw):
        self.group = group
        self._raw = raw
        self._enc = None

    def __add__(self, other: Point) -> Point:
        return Point(self.group, self.group._add(self._raw, other._raw))

    def __neg__(self) -> Point:
        return Point(self.group, self.group._neg(self._raw))

    def __sub__(self, other: Point) -> Point:
        return self + (-other)

    def __mul__(self, k: int) -> Point:
        return self.group._scalar_mult(self, int(k))

    __rmul__ = __mul__

    def to_bytes(self) -> bytes:
        if self._enc is None:
            self._enc = self.group._encode(self._raw)
        return self._enc

    __bytes__ = to_bytes

    def is_identity(self) -> bool:
        return self.group._is_identity(self._raw)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return self.group is other.group and self.to_bytes() == other.to_bytes()

    def __hash__(self) -> int:
        return hash(self.to_bytes())

    def __repr__(self) -> str:
        return f"Point({self.group.group_id}, {self.to_bytes().hex()})"


class GroupParams:
    """A cyclic group of prime order with a fixed generator."""

    group_id: str
    order: int
    element_size: int

    @property
    def order_q(self) -> int:
        return self.order

    @property
    def scalar_size(self) -> int:
        return (self.order.bit_length() + 7) // 8

    @property
    def generator(self) -> Point:
        return self._generator

    @property
    def identity(self) -> Point:
        return Point(self, self._identity_raw())

    def base_mul(self, k: int) -> Point:
        return self.generator * k

    def multi_mul(self, pairs: Iterable[tuple[Point, int]]) -> Point:
        """Sum of ``point * scalar`` over ``pairs``."""
        acc = self.identity
        for pt, k in pairs:
            acc = acc + pt * k
        return acc

    def decode_point(self, data: bytes) -> Point:
        pt = Point(self, self._decode(bytes(data)))
        pt._enc = bytes(data)
        return pt

    def encode_scalar(self, k: int) -> bytes:
        return (k % self.order).to_bytes(self.scalar_size, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_size:
            raise DecodeError("bad scalar width")
        k = int.from_bytes(data, "big")
        if k >= self.order:
            raise DecodeError("scalar out of range")
        return k

    def random_scalar(self, rng: Rng | None = None) -> int:
        """Uniform scalar in ``[1, order - 1]``."""
        rng = rng or secrets.SystemRandom()
        return rng.randrange(1, self.order)

    def hash_to_scalar(self, label: bytes, *parts: bytes) -> int:
        # 512-bit digest keeps the modular reduction bias negligible
        h = hashlib.sha512(pack(b"pimsauth/h2s", self.group_id.encode(), label, *parts))
        return int.from_bytes(h.digest(), "big") % self.order

    def hash_to_point(self, label: bytes) -> Point:
        raise NotImplementedError

    def validate(self) -> None:
        if not gmpy2.is_prime(self.order, 40):
            raise InvalidParams(f"{self.group_id}: order is not prime")
        g = self.generator
        if g.is_identity() or not (g * self.order).is_identity():
            raise InvalidParams(f"{self.group_id}: generator does not have order q")

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.group_id}>"

    # raw-level hooks overridden by implementations
    def _identity_raw(self): raise NotImplementedError
    def _is_identity(self, a) -> bool: raise NotImplementedError
    def _add(self, a, b): raise NotImplementedError
    def _neg(self, a): raise NotImplementedError
    def _scalar_mult(self, pt: Point, k: int) -> Point: raise NotImplementedError
    def _encode(self, a) -> bytes: raise NotImplementedError
    def _decode(self, data: bytes): raise NotImplementedError


class SchnorrGroup(GroupParams):
    """Order-``q`` subgroup of the multiplicative group mod a prime ``p``.

    ``q`` must divide ``p - 1``. The group law is modular multiplication.
    """

    def __init__(self, p: int, q: int, g: int | None = None, group_id: str | None = None):
        if not gmpy2.is_prime(p) or (p - 1) % q:
            raise InvalidParams("p must be prime with q | p - 1")
        self.p = p
        self.order = q
        self.cofactor = (p - 1) // q
        self.group_id = group_id or f"schnorr-{p}-{q}"
        self.element_size = (p.bit_length() + 7) // 8
        if g is None:
            g = next(h for h in (pow(x, self.cofactor, p) for x in range(2, p)) if h != 1)
        self._generator = Point(self, g % p)
        self.validate()

    def _identity_raw(self):
        return 1

    def _is_identity(self, a) -> bool:
        return a == 1

    def _add(self, a, b):
        return a * b % self.p

    def _neg(self, a):
        return pow(a, -1, self.p)

    def _scalar_mult(self, pt, k):
        return Point(self, pow(pt._raw, k % self.order, self.p))

    def _encode(self, a) -> bytes:
        return int(a).to_bytes(self.element_size, "big")

    def _decode(self, data: bytes):
        if len(data) != self.element_size:
            raise DecodeError("bad element width")
        a = int.from_bytes(data, "big")
        if not 0 < a < self.p or pow(a, self.order, self.p) != 1:
            raise DecodeError("not a subgroup element")
        return a

    def hash_to_point(self, label: bytes) -> Point:
        ctr = 0
        while True:
            h = hashlib.sha512(pack(b"pimsauth/h2p", self.group_id.encode(), label, ctr.to_bytes(4, "big")))
            x = int.from_bytes(h.digest(), "big") % self.p
            a = pow(x, self.cofactor, self.p) if x else 1
            if a != 1:
                return Point(self, a)
            ctr += 1


# --- secp256k1 ------------------------------------------------------------

_P = mpz(2**256 - 2**32 - 977)
_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
_GX = mpz(0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798)
_GY = mpz(0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8)
_INF = (mpz(1), mpz(1), mpz(0))
_SQRT_EXP = (_P + 1) // 4


def _dbl(pt):
    X, Y, Z = pt
    if not Z or not Y:
        return _INF
    YY = Y * Y % _P
    S = 4 * X * YY % _P
    M = 3 * X * X % _P
    X3 = (M * M - 2 * S) % _P
    return X3, (M * (S - X3) - 8 * YY * YY) % _P, 2 * Y * Z % _P


def _jadd(p, q):
    X1, Y1, Z1 = p
    X2, Y2, Z2 = q
    if not Z1:
        return q
    if not Z2:
        return p
    Z1Z1 = Z1 * Z1 % _P
    Z2Z2 = Z2 * Z2 % _P
    U1 = X1 * Z2Z2 % _P
    S1 = Y1 * Z2 * Z2Z2 % _P
    H = (X2 * Z1Z1 - U1) % _P
    R = (Y2 * Z1 * Z1Z1 - S1) % _P
    if not H:
        return _dbl(p) if not R else _INF
    HH = H * H % _P
    HHH = H * HH % _P
    V = U1 * HH % _P
    X3 = (R * R - HHH - 2 * V) % _P
    return X3, (R * (V - X3) - S1 * HHH) % _P, Z1 * Z2 * H % _P


def _madd(p, x2, y2):
    """Jacobian ``p`` plus affine ``(x2, y2)``."""
    X1, Y1, Z1 = p
    if not Z1:
        return x2, y2, mpz(1)
    Z1Z1 = Z1 * Z1 % _P
    H = (x2 * Z1Z1 - X1) % _P
    R = (y2 * Z1 * Z1Z1 - Y1) % _P
    if not H:
        return _dbl(p) if not R else _INF
    HH = H * H % _P
    HHH = H * HH % _P
    V = X1 * HH % _P
    X3 = (R * R - HHH - 2 * V) % _P
    return X3, (R * (V - X3) - Y1 * HHH) % _P, Z1 * H % _P


def _to_affine_many(pts):
    """Batch-normalize Jacobian points (none at infinity) with one inversion."""
    acc = [mpz(1)] * len(pts)
    run = mpz(1)
    for i, (_, _, Z) in enumerate(pts):
        acc[i] = run
        run = run * Z % _P
    inv = gmpy2.invert(run, _P)
    out = [None] * len(pts)
    for i in range(len(pts) - 1, -1, -1):
        X, Y, Z = pts[i]
        zi = inv * acc[i] % _P
        inv = inv * Z % _P
        zi2 = zi * zi % _P
        out[i] = (X * zi2 % _P, Y * zi2 * zi % _P)
    return out


def _wnaf(k: int, w: int) -> list[int]:
    digits = []
    half, full = 1 << (w - 1), 1 << w
    while k:
        if k & 1:
            d = k & (full - 1)
            if d >= half:
                d -= full
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def _odd_multiples(pt, count):
    """Affine ``[P, 3P, 5P, ...]`` of length ``count``."""
    two = _dbl(pt)
    jac = [pt]
    for _ in range(count - 1):
        jac.append(_jadd(jac[-1], two))
    return _to_affine_many(jac)


class _FixedBaseTable:
    """Byte-windowed precomputation: one mixed addition per nonzero scalar byte."""

    def __init__(self, pt, nbytes: int = 32):
        rows = []
        base = pt
        for _ in range(nbytes):
            row = [base]
            for _ in range(254):
                row.append(_jadd(row[-1], base))
            rows.append(row)
            for _ in range(8):
                base = _dbl(base)
        flat = _to_affine_many([p for row in rows for p in row])
        self.rows = [flat[i * 255:(i + 1) * 255] for i in range(nbytes)]

    def mul(self, k: int):
        acc = _INF
        for i, byte in enumerate(k.to_bytes(32, "little")):
            if byte:
                x, y = self.rows[i][byte - 1]
                acc = _madd(acc, x, y)
        return acc


class Secp256k1(GroupParams):
    group_id = "secp256k1"
    order = _N
    element_size = 33

    def __init__(self):
        self._generator = Point(self, (_GX, _GY, mpz(1)))
        self._tables: dict[bytes, _FixedBaseTable] = {}
        self.precompute(self._generator)

    def precompute(self, pt: Point) -> None:
        """Build a fixed-base table so later ``pt * k`` calls are ~4x faster."""
        key = pt.to_bytes()
        if key not in self._tables and not pt.is_identity():
            self._tables[key] = _FixedBaseTable(pt._raw)

    def _identity_raw(self):
        return _INF

    def _is_identity(self, a) -> bool:
        return not a[2]

    def _add(self, a, b):
        return _jadd(a, b)

    def _neg(self, a):
        return (a[0], (-a[1]) % _P, a[2])

    def _scalar_mult(self, pt, k):
        k %= _N
        if not k or pt.is_identity():
            return self.identity
        table = self._tables.get(pt.to_bytes()) if self._tables else None
        if table is not None:
            return Point(self, table.mul(k))
        odd = _odd_multiples(pt._raw, 8)
        acc = _INF
        for d in reversed(_wnaf(k, 5)):
            acc = _dbl(acc)
            if d > 0:
                x, y = odd[d >> 1]
                acc = _madd(acc, x, y)
            elif d < 0:
                x, y = odd[(-d) >> 1]
                acc = _madd(acc, x, _P - y)
        return Point(self, acc)

    def multi_mul(self, pairs):
        """Straus interleaving; bases with a fixed table are handled separately."""
        acc = _INF
        var = []
        for pt, k in pairs:
            k %= _N
            if not k or pt.is_identity():
                continue
            table = self._tables.get(pt.to_bytes())
            if table is not None:
                acc = _jadd(acc, table.mul(k))
            else:
                var.append((_odd_multiples(pt._raw, 8), _wnaf(k, 5)))
        if var:
            length = max(len(d) for _, d in var)
            inter = _INF
            for i in range(length - 1, -1, -1):
                inter = _dbl(inter)
                for odd, digits in var:
                    if i < len(digits):
                        d = digits[i]
                        if d > 0:
                            x, y = odd[d >> 1]
                            inter = _madd(inter, x, y)
                        elif d < 0:
                            x, y = odd[(-d) >> 1]
                            inter = _madd(inter, x, _P - y)
            acc = _jadd(acc, inter)
        return Point(self, acc)

    def _encode(self, a) -> bytes:
        if not a[2]:
            return bytes(33)
        ((x, y),) = _to_affine_many([a])
        return bytes([2 | (int(y) & 1)]) + int(x).to_bytes(32, "big")

    def _decode(self, data: bytes):
        if len(data) != 33:
            raise DecodeError("bad point width")
        if data == bytes(33):
            return _INF
        if data[0] not in (2, 3):
            raise DecodeError("bad point prefix")
        x = mpz(int.from_bytes(data[1:], "big"))
        if x >= _P:
            raise DecodeError("x out of range")
        y = self._lift_x(x)
        if y is None:
            raise DecodeError("point not on curve")
        if (int(y) & 1) != (data[0] & 1):
            y = _P - y
        return x, y, mpz(1)

    @staticmethod
    def _lift_x(x):
        rhs = (x * x * x + 7) % _P
        y = gmpy2.powmod(rhs, _SQRT_EXP, _P)
        return y if y * y % _P == rhs else None

    def hash_to_point(self, label: bytes) -> Point:
        # try-and-increment; fine for fixed public parameters
        ctr = 0
        while True:
            h = hashlib.sha256(pack(b"pimsauth/h2p", self.group_id.encode(), label, ctr.to_bytes(4, "big")))
            x = mpz(int.from_bytes(h.digest(), "big"))
            if x < _P:
                y = self._lift_x(x)
                if y is not None:
                    if y & 1:
                        y = _P - y
                    return Point(self, (x, y, mpz(1)))
            ctr += 1


SECP256K1 = Secp256k1()
# order-257 subgroup of Z_1543^*: the scalar field is the hand-checkable GF(257)
TOY257 = SchnorrGroup(p=1543, q=257, group_id="toy257")
DEFAULT_GROUP: GroupParams = SECP256K1

_REGISTRY: dict[str, GroupParams] = {g.group_id: g for g in (SECP256K1, TOY257)}


def get_group(group_id: str) -> GroupParams:
    try:
        return _REGISTRY[group_id]
    except KeyError:
        raise InvalidParams(f"unknown group {group_id!r}") from None


def register_group(group: GroupParams) -> GroupParams:
    _REGISTRY[group.group_id] = group
    return group


def lagrange_at_zero(xs: Sequence[int], i: int, q: int) -> int:
    """Lagrange basis coefficient of abscissa ``xs[i]`` evaluated at x = 0, mod ``q``."""
    xi = xs[i]
    num, den = 1, 1
    for j, xj in enumerate(xs):
        if j != i:
            num = num * xj % q
            den = den * (xj - xi) % q
    return num * pow(den, -1, q) % q

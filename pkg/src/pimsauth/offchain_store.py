"""Content-addressed blob store for ciphertexts, plus salted/peppered digests."""

from __future__ import annotations

import hashlib
import hmac
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .errors import DecodeError, IntegrityMismatch, NotFound
from .groups import Rng, make_rng

SALT_SIZE = 16


@dataclass(frozen=True)
class StorageRef:
    value: bytes

    def __post_init__(self):
        if len(self.value) != 32:
            raise DecodeError("storage refs are 32 bytes")

    @classmethod
    def of(cls, blob: bytes) -> StorageRef:
        return cls(hashlib.sha256(blob).digest())

    def hex(self) -> str:
        return self.value.hex()

    def __bytes__(self) -> bytes:
        return self.value

    def __str__(self) -> str:
        return self.hex()


@dataclass(frozen=True)
class Digest:
    salt: bytes
    value: bytes

    def __post_init__(self):
        if len(self.salt) != SALT_SIZE or len(self.value) != 32:
            raise DecodeError("digest needs a 16-byte salt and a 32-byte hash")

    def to_bytes(self) -> bytes:
        return self.salt + self.value

    @classmethod
    def from_bytes(cls, data: bytes) -> Digest:
        return cls(data[:SALT_SIZE], data[SALT_SIZE:])


def _salted_hash(ciphertext: bytes, pepper: bytes, salt: bytes) -> bytes:
    h = hashlib.sha256()
    h.update(pepper)
    h.update(salt)
    h.update(ciphertext)
    return h.digest()


def make_digest(ciphertext: bytes, pepper: bytes, salt: bytes | None = None, rng: Rng | None = None) -> Digest:
    if salt is None:
        salt = (rng or make_rng()).randbytes(SALT_SIZE)
    return Digest(salt, _salted_hash(ciphertext, pepper, salt))


def verify_integrity(ciphertext: bytes, digest: Digest, pepper: bytes) -> bool:
    return hmac.compare_digest(_salted_hash(ciphertext, pepper, digest.salt), digest.value)


class Backend(Protocol):
    def write(self, key: str, data: bytes) -> None: ...
    def read(self, key: str) -> bytes: ...
    def exists(self, key: str) -> bool: ...


class MemoryBackend:
    def __init__(self):
        self._blobs: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def write(self, key: str, data: bytes) -> None:
        with self._lock:
            self._blobs.setdefault(key, bytes(data))

    def read(self, key: str) -> bytes:
        try:
            return self._blobs[key]
        except KeyError:
            raise NotFound(key) from None

    def exists(self, key: str) -> bool:
        return key in self._blobs


class FilesystemBackend:
    """``<root>/<first two hex chars>/<full hex ref>``, raw bytes."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, key: str) -> Path:
        return self.root / key[:2] / key

    def write(self, key: str, data: bytes) -> None:
        path = self.path_for(key)
        if path.exists():
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)

    def read(self, key: str) -> bytes:
        try:
            return self.path_for(key).read_bytes()
        except FileNotFoundError:
            raise NotFound(key) from None

    def exists(self, key: str) -> bool:
        return self.path_for(key).exists()


class BlobStore:
    """Stores only ciphertexts; reads are self-verifying against the ref."""

    def __init__(self, backend: Backend | None = None):
        self.backend = backend if backend is not None else MemoryBackend()

    def put(self, ciphertext: bytes) -> StorageRef:
        ref = StorageRef.of(ciphertext)
        self.backend.write(ref.hex(), ciphertext)
        return ref

    def get(self, ref: StorageRef) -> bytes:
        data = self.backend.read(ref.hex())
        if hashlib.sha256(data).digest() != ref.value:
            raise IntegrityMismatch(f"blob {ref.hex()} does not match its reference")
        return data

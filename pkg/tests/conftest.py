from __future__ import annotations

from dataclasses import dataclass

import pytest

from pimsauth.authz import AuthNetwork, DataOwner, LatencyModel, PublishedRecord, request_access
from pimsauth.crypto_core import KeyPair, generate_keypair
from pimsauth.groups import SECP256K1, make_rng
from pimsauth.ledger import Ledger, Scheme
from pimsauth.offchain_store import BlobStore
from pimsauth.secret_sharing import ThresholdPolicy

PEPPER = b"test-pepper"


@dataclass
class World:
    ledger: Ledger
    network: AuthNetwork
    store: BlobStore
    owner: DataOwner

    @property
    def rng(self):
        return self.owner.rng

    def consumer(self) -> KeyPair:
        return generate_keypair(SECP256K1, rng=self.rng)

    def publish(self, payload: bytes, scheme: Scheme, t: int) -> PublishedRecord:
        return self.owner.publish(payload, scheme, ThresholdPolicy(t, self.network.n))

    def open(self, consumer: KeyPair, record: PublishedRecord, **kw) -> bytes:
        return request_access(consumer, record.record_id, self.network, store=self.store, pepper=PEPPER,
                              rng=self.rng, **kw)


def make_world(n: int, seed="world", latency: str | None = None, timeout: float = 5.0, record=False) -> World:
    ledger = Ledger()
    network = AuthNetwork.create(n, ledger, SECP256K1, latency=LatencyModel.parse(latency), seed=f"{seed}/net",
                                 timeout=timeout, record=record)
    store = BlobStore()
    owner = DataOwner(network, store, PEPPER, rng=make_rng(f"{seed}/owner"))
    return World(ledger, network, store, owner)


@pytest.fixture
def world5() -> World:
    return make_world(5)


@pytest.fixture(params=[Scheme.SS, Scheme.PRE], ids=["ss", "pre"])
def scheme(request) -> Scheme:
    return request.param


# -- acceptance reporting: one PASS/FAIL line per criterion ------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")

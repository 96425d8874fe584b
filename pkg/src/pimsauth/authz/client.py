"""Consumer side of the access protocol.

The client signs one request, fans it out to every node and consumes replies
as they arrive. Each reply is verified before it counts toward the threshold;
invalid replies are dropped and the client keeps waiting for spares.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from ..crypto_core import Capsule, KeyPair, SymmetricKey, dem_decrypt, hybrid_decrypt, kem_decapsulate
from ..errors import CombineVerificationFailure, InsufficientResponses, IntegrityMismatch, PimsError
from ..groups import Point, Rng
from ..ledger import Scheme
from ..offchain_store import BlobStore, verify_integrity
from ..secret_sharing import Share, ThresholdPolicy, reconstruct_secret, verify_share
from ..threshold_pre import CFrag, combine_and_decapsulate, verify_cfrag
from ..timing import PhaseClock
from .messages import AccessRequest, Denial, EncryptedShare, NodeResponse, SealedPayload, payload_aad
from .network import AuthNetwork
from .node import share_aad

log = logging.getLogger(__name__)


@dataclass
class AccessReport:
    """What happened during one :func:`request_access` call."""

    accepted: list[int] = field(default_factory=list)
    rejected: list[tuple[int, str]] = field(default_factory=list)
    denied: list[tuple[int, str]] = field(default_factory=list)


class _Collector:
    def __init__(self, consumer: KeyPair, record_id: bytes, sealed: SealedPayload, t: int, n: int,
                 report: AccessReport):
        self.consumer = consumer
        self.record_id = record_id
        self.owner_pk: Point = sealed.owner_pk
        self.capsule: Capsule = sealed.capsule
        self.t = t
        self.n = n
        self.report = report
        # buckets keyed by the key-material generation they belong to
        self.buckets: dict[bytes, dict[int, object]] = {}

    def _reject(self, node_id: int, why: str) -> None:
        log.info("dropping response from node %d: %s", node_id, why)
        self.report.rejected.append((node_id, why))

    def offer(self, resp: NodeResponse) -> None:
        if isinstance(resp.payload, Denial):
            self.report.denied.append((resp.node_id, resp.payload.reason.value))
            return
        self._offer(resp)

    def _accept(self, node_id: int, bucket_key: bytes, key: int, item) -> None:
        bucket = self.buckets.setdefault(bucket_key, {})
        if key in bucket:
            self._reject(node_id, "duplicate")
            return
        bucket[key] = item
        self.report.accepted.append(node_id)

    def _best(self) -> dict | None:
        full = [b for b in self.buckets.values() if len(b) >= self.t]
        return full[0] if full else None

    @property
    def ready(self) -> bool:
        return self._best() is not None

    @property
    def valid(self) -> int:
        return max((len(b) for b in self.buckets.values()), default=0)


class _ShareCollector(_Collector):
    def _offer(self, resp: NodeResponse) -> None:
        p = resp.payload
        if not isinstance(p, EncryptedShare):
            return self._reject(resp.node_id, "wrong payload type")
        cs = p.commitments
        if cs.public_key != self.owner_pk or len(cs.commitments) != self.t:
            return self._reject(resp.node_id, "foreign commitment set")
        g = self.owner_pk.group
        try:
            raw = hybrid_decrypt(self.consumer.secret_key, g, p.ciphertext, share_aad(self.record_id, resp.node_id))
            share = Share.from_bytes(raw, g, cs.id)
        except (PimsError, ValueError):
            return self._reject(resp.node_id, "undecryptable share")
        if not 1 <= share.index <= self.n or not verify_share(share, cs):
            return self._reject(resp.node_id, "share fails commitment check")
        self._accept(resp.node_id, cs.id, share.index, share)

    def open(self) -> SymmetricKey:
        shares = list(self._best().values())
        sk = reconstruct_secret(shares, ThresholdPolicy(self.t, self.n), self.owner_pk.group)
        if self.owner_pk.group.base_mul(sk) != self.owner_pk:
            raise CombineVerificationFailure("reconstructed key does not match the KEM public key")
        return kem_decapsulate(sk, self.capsule)


class _CFragCollector(_Collector):
    def _offer(self, resp: NodeResponse) -> None:
        cfrag = resp.payload
        if not isinstance(cfrag, CFrag):
            return self._reject(resp.node_id, "wrong payload type")
        if not verify_cfrag(cfrag, self.capsule, self.owner_pk, self.consumer.public_key):
            return self._reject(resp.node_id, "cfrag fails verification")
        self._accept(resp.node_id, cfrag.precursor.to_bytes(), cfrag.kfrag_id, cfrag)

    def open(self) -> SymmetricKey:
        cfrags = list(self._best().values())
        return combine_and_decapsulate(
            self.consumer.secret_key, self.owner_pk, self.capsule, cfrags, self.t, check=False
        )


def request_access(
    consumer: KeyPair,
    record_id: bytes,
    network: AuthNetwork,
    t: int | None = None,
    *,
    store: BlobStore,
    pepper: bytes,
    timeout: float | None = None,
    clock: PhaseClock | None = None,
    report: AccessReport | None = None,
    rng: Rng | None = None,
) -> bytes:
    """Run the consumer protocol end to end and return the plaintext."""
    clock = clock or PhaseClock()
    report = report if report is not None else AccessReport()
    record = network.ledger.get_record(record_id)
    t = t or record.policy.t

    with clock.phase("client_open"):
        blob = store.get(record.storage_ref)
        if not verify_integrity(blob, record.digest, pepper):
            raise IntegrityMismatch("stored payload does not match the ledger digest")
        sealed = SealedPayload.from_bytes(blob)
        request = AccessRequest.create(consumer, record_id, rng)
        cls = _ShareCollector if record.scheme is Scheme.SS else _CFragCollector
        collector = cls(consumer, record_id, sealed, t, record.policy.n, report)

    responses = network.fan_out(request, timeout)
    try:
        while not collector.ready:
            with clock.phase("node_response"):
                resp = next(responses, None)
            if resp is None:
                break
            with clock.phase("client_open"):
                collector.offer(resp)
    finally:
        responses.close()

    if not collector.ready:
        raise InsufficientResponses(
            f"{collector.valid} valid responses, need {t}",
            valid=collector.valid,
            received=len(report.accepted) + len(report.rejected) + len(report.denied),
        )
    with clock.phase("client_open"):
        key = collector.open()
        return dem_decrypt(key, sealed.ciphertext, payload_aad(sealed.owner_pk))

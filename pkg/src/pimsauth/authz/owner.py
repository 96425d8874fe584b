"""Owner-side workflow: encrypt, store, register on the ledger, distribute material."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..crypto_core import (
    Capsule,
    KeyPair,
    KeyRole,
    dem_encrypt,
    generate_keypair,
    hybrid_encrypt,
    kem_encapsulate,
)
from ..errors import CountMismatch, ProvisioningFailed, Unauthorized, UnknownRecord
from ..groups import DEFAULT_GROUP, GroupParams, Point, Rng, make_rng
from ..ledger import AclTx, Address, DeployTx, Scheme
from ..offchain_store import BlobStore, Digest, StorageRef, make_digest
from ..secret_sharing import CommitmentSet, Share, ThresholdPolicy, split_secret
from ..threshold_pre import KFrag, generate_kfrags
from .messages import Ack, CapsuleEnvelope, ProvisionMessage, SealedPayload, material_aad, payload_aad
from .network import AuthNetwork


@dataclass(frozen=True)
class SealedData:
    kem: KeyPair
    capsule: Capsule
    blob: bytes
    storage_ref: StorageRef
    digest: Digest


@dataclass
class PublishedRecord:
    record_id: bytes
    kem: KeyPair
    capsule: Capsule
    scheme: Scheme
    policy: ThresholdPolicy
    storage_ref: StorageRef
    digest: Digest
    commitments: CommitmentSet | None = None

    def envelope(self) -> CapsuleEnvelope:
        return CapsuleEnvelope(self.record_id, self.capsule, self.kem.public_key, self.scheme, self.commitments)


def provision(
    owner: KeyPair,
    record_id: bytes,
    materials: Sequence[Share | KFrag],
    network: AuthNetwork,
    envelope: CapsuleEnvelope,
    consumer_pk: Point | None = None,
    rng: Rng | None = None,
) -> list[Ack]:
    """Send material ``i`` to node ``i``, encrypted to that node's identity key."""
    if len(materials) != network.n:
        raise CountMismatch(f"{len(materials)} materials for {network.n} nodes")
    if record_id not in network.ledger.state():
        raise UnknownRecord(record_id.hex())
    group = envelope.owner_pk.group
    messages = []
    for node, material in zip(network.nodes, materials):
        raw = material.to_bytes(group) if isinstance(material, Share) else material.to_bytes()
        sealed = hybrid_encrypt(node.identity.public_key, raw, material_aad(record_id, node.node_id), rng)
        messages.append(ProvisionMessage.create(owner, record_id, node.node_id, envelope, consumer_pk, sealed, rng))
    acks = network.deliver_provision(messages)
    failed = [a for a in acks if not a.ok]
    if failed:
        if all(a.reason == "Unauthorized" for a in failed):
            exc = Unauthorized(f"{len(failed)} nodes rejected a non-owner provisioning")
            exc.acks = acks
            raise exc
        if all(a.reason == "UnknownRecord" for a in failed):
            raise UnknownRecord(record_id.hex())
        raise ProvisioningFailed(f"{len(failed)} of {len(acks)} nodes rejected provisioning", acks)
    return acks


class DataOwner:
    """One data owner (ledger account) publishing records to a network."""

    def __init__(self, network: AuthNetwork, store: BlobStore, pepper: bytes, account: KeyPair | None = None,
                 group: GroupParams = DEFAULT_GROUP, rng: Rng | None = None):
        self.network = network
        self.ledger = network.ledger
        self.store = store
        self.pepper = pepper
        self.group = group
        self.rng = rng or make_rng()
        self.account = account or generate_keypair(group, role=KeyRole.ACCOUNT, rng=self.rng)

    @property
    def address(self) -> Address:
        return Address.of(self.account.public_key)

    def seal(self, plaintext: bytes) -> SealedData:
        """Fresh KEM key, capsule and DEM ciphertext; stores the result off-chain."""
        kem = generate_keypair(self.group, role=KeyRole.OWNER_KEM, rng=self.rng)
        key, capsule = kem_encapsulate(kem.public_key, self.rng)
        ct = dem_encrypt(key, plaintext, payload_aad(kem.public_key), self.rng)
        blob = SealedPayload(kem.public_key, capsule, ct).to_bytes()
        ref = self.store.put(blob)
        return SealedData(kem, capsule, blob, ref, make_digest(blob, self.pepper, rng=self.rng))

    def register(self, sealed: SealedData, scheme: Scheme | str, policy: ThresholdPolicy) -> PublishedRecord:
        scheme = Scheme(scheme)
        tx = DeployTx.create(self.account, sealed.storage_ref, sealed.digest, scheme, policy, rng=self.rng)
        record_id = self.ledger.deploy_record(tx)
        return PublishedRecord(record_id, sealed.kem, sealed.capsule, scheme, policy, sealed.storage_ref, sealed.digest)

    def distribute_shares(self, record: PublishedRecord) -> list[Ack]:
        shares, commitments = split_secret(record.kem.secret_key, record.policy, self.group, rng=self.rng)
        record.commitments = commitments
        return provision(self.account, record.record_id, shares, self.network, record.envelope(), rng=self.rng)

    def distribute_kfrags(self, record: PublishedRecord, consumer_pk: Point) -> list[Ack]:
        kfrags = generate_kfrags(record.kem.secret_key, consumer_pk, record.policy, rng=self.rng)
        return provision(self.account, record.record_id, kfrags, self.network, record.envelope(), consumer_pk, self.rng)

    def publish(self, plaintext: bytes, scheme: Scheme | str, policy: ThresholdPolicy) -> PublishedRecord:
        record = self.register(self.seal(plaintext), scheme, policy)
        if record.scheme is Scheme.SS:
            self.distribute_shares(record)
        return record

    def allow(self, record: PublishedRecord, consumer_pk: Point) -> int:
        """Ledger-only grant."""
        tx = AclTx.create(self.account, "grant", record.record_id, Address.of(consumer_pk), self.rng)
        return self.ledger.grant(tx)

    def grant(self, record: PublishedRecord, consumer_pk: Point) -> int:
        """Ledger grant plus, for PRE, a fresh set of kfrags toward the consumer."""
        seq = self.allow(record, consumer_pk)
        if record.scheme is Scheme.PRE:
            self.distribute_kfrags(record, consumer_pk)
        return seq

    def revoke(self, record: PublishedRecord, consumer_pk: Point) -> int:
        tx = AclTx.create(self.account, "revoke", record.record_id, Address.of(consumer_pk), self.rng)
        return self.ledger.revoke(tx)

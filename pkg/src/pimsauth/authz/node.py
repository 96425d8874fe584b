"""Authorization node: holds one piece of threshold material per record."""

from __future__ import annotations

import enum
import logging
import threading
from collections import OrderedDict

from ..codec import pack, u32
from ..crypto_core import KeyPair, hybrid_decrypt, hybrid_encrypt, verify
from ..errors import DecodeError, PimsError, UnknownRecord
from ..groups import Rng, make_rng
from ..ledger import Address, Ledger, Scheme
from ..secret_sharing import Share, verify_share
from ..threshold_pre import CFrag, decode_kfrag, reencrypt, verify_kfrag
from .messages import (
    TAG_PROVISION,
    TAG_REQUEST,
    AccessRequest,
    Ack,
    CapsuleEnvelope,
    Denial,
    DenialReason,
    EncryptedShare,
    NodeResponse,
    ProvisionMessage,
    decode_frame,
    material_aad,
)

log = logging.getLogger(__name__)

REPLAY_CACHE_SIZE = 1 << 16


class Fault(enum.Enum):
    HONEST = "honest"
    OFFLINE = "offline"
    CORRUPT = "corrupt"


def share_aad(record_id: bytes, node_id: int) -> bytes:
    return pack(b"pimsauth/share", record_id, u32(node_id))


class AuthNode:
    def __init__(self, node_id: int, identity: KeyPair, ledger: Ledger, rng: Rng | None = None):
        self.node_id = node_id
        self.identity = identity
        self.ledger = ledger
        self.fault = Fault.HONEST
        # (record_id, consumer address or None) -> Share | KFrag
        self.vault: dict[tuple[bytes, Address | None], object] = {}
        self.envelopes: dict[bytes, CapsuleEnvelope] = {}
        self._seen: OrderedDict[tuple, None] = OrderedDict()
        self._vault_lock = threading.Lock()
        self._seen_lock = threading.Lock()
        self._rng = rng or make_rng()

    def __repr__(self) -> str:
        return f"AuthNode({self.node_id}, {self.fault.value}, {len(self.vault)} entries)"

    # -- provisioning --------------------------------------------------------

    def provision(self, msg: ProvisionMessage) -> Ack:
        def nack(reason: str) -> Ack:
            log.debug("node %d rejected provisioning: %s", self.node_id, reason)
            return Ack(self.node_id, msg.record_id, False, reason)

        if msg.node_id != self.node_id:
            return nack("WrongNode")
        if not verify(msg.signer_pk, msg.message(), msg.signature):
            return nack("BadSignature")
        try:
            record = self.ledger.get_record(msg.record_id)
        except UnknownRecord:
            return nack("UnknownRecord")
        if Address.of(msg.signer_pk) != record.owner:
            return nack("Unauthorized")
        env = msg.envelope
        if env.record_id != msg.record_id or env.scheme != record.scheme:
            return nack("EnvelopeMismatch")
        try:
            raw = hybrid_decrypt(
                self.identity.secret_key, self.identity.group, msg.sealed_material,
                material_aad(msg.record_id, self.node_id),
            )
        except (PimsError, ValueError):
            return nack("BadMaterial")

        if record.scheme is Scheme.SS:
            if env.commitments is None or env.commitments.public_key != env.owner_pk:
                return nack("InvalidMaterial")
            try:
                material = Share.from_bytes(raw, env.owner_pk.group, env.commitments.id)
            except DecodeError:
                return nack("BadMaterial")
            if not verify_share(material, env.commitments):
                return nack("InvalidMaterial")
            slot = (msg.record_id, None)
        else:
            if msg.consumer_pk is None or not env.capsule.verify():
                return nack("InvalidMaterial")
            try:
                material = decode_kfrag(raw)
            except PimsError:
                return nack("BadMaterial")
            if not verify_kfrag(material, env.owner_pk, msg.consumer_pk):
                return nack("InvalidMaterial")
            slot = (msg.record_id, Address.of(msg.consumer_pk))

        with self._vault_lock:
            known = self.envelopes.get(msg.record_id)
            if known is not None and known != env:
                return nack("EnvelopeMismatch")
            self.envelopes[msg.record_id] = env
            self.vault[slot] = material
        return Ack(self.node_id, msg.record_id, True)

    # -- access requests ----------------------------------------------------

    def _fresh_nonce(self, req: AccessRequest) -> bool:
        key = (req.consumer_pk.to_bytes(), req.record_id, req.nonce)
        with self._seen_lock:
            if key in self._seen:
                return False
            self._seen[key] = None
            if len(self._seen) > REPLAY_CACHE_SIZE:
                self._seen.popitem(last=False)
        return True

    def handle_request(self, req: AccessRequest) -> NodeResponse:
        def deny(reason: DenialReason) -> NodeResponse:
            return NodeResponse(self.node_id, Denial(reason))

        if not req.verify() or not self._fresh_nonce(req):
            return deny(DenialReason.BAD_SIGNATURE)
        try:
            record = self.ledger.get_record(req.record_id)
        except UnknownRecord:
            return deny(DenialReason.UNKNOWN_RECORD)
        consumer = Address.of(req.consumer_pk)
        if consumer not in record.acl:
            return deny(DenialReason.NOT_IN_ACL)
        env = self.envelopes.get(req.record_id)
        slot = (req.record_id, None if record.scheme is Scheme.SS else consumer)
        material = self.vault.get(slot)
        if env is None or material is None:
            return deny(DenialReason.NOT_PROVISIONED)

        if record.scheme is Scheme.SS:
            share = material
            if self.fault is Fault.CORRUPT:
                share = Share(share.index, (share.value + 1) % env.owner_pk.group.order, share.commitment_set_id)
            ct = hybrid_encrypt(
                req.consumer_pk, share.to_bytes(env.owner_pk.group),
                share_aad(req.record_id, self.node_id), self._rng,
            )
            return NodeResponse(self.node_id, EncryptedShare(ct, env.commitments))

        # capsule was verified once at provisioning
        cfrag = reencrypt(material, env.capsule, self._rng, check_capsule=False)
        if self.fault is Fault.CORRUPT:
            g = env.owner_pk.group
            cfrag = CFrag(cfrag.e1 + g.generator, cfrag.v1, cfrag.kfrag_id, cfrag.precursor, cfrag.proof)
        return NodeResponse(self.node_id, cfrag)

    # -- wire entry point ---------------------------------------------------

    def handle_frame(self, frame: bytes) -> bytes:
        tag, body = decode_frame(frame)
        if tag == TAG_REQUEST:
            try:
                req = AccessRequest.from_body(body)
            except (PimsError, ValueError):
                return NodeResponse(self.node_id, Denial(DenialReason.MALFORMED)).to_frame()
            return self.handle_request(req).to_frame()
        if tag == TAG_PROVISION:
            try:
                msg = ProvisionMessage.from_body(body)
            except (PimsError, ValueError):
                return Ack(self.node_id, b"", False, "Malformed").to_frame()
            return self.provision(msg).to_frame()
        raise DecodeError(f"node cannot handle frame tag {tag:#x}")

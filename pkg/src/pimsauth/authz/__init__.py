"""Decentralized authorization service: nodes, transport, owner and client flows."""

from .client import AccessReport, request_access
from .messages import (
    AccessRequest,
    Ack,
    CapsuleEnvelope,
    Denial,
    DenialReason,
    EncryptedShare,
    NodeResponse,
    ProvisionMessage,
    SealedPayload,
    decode_frame,
    encode_frame,
)
from .network import AuthNetwork, InProcessTransport, LatencyModel, NetworkConfig
from .node import AuthNode, Fault
from .owner import DataOwner, PublishedRecord, provision

__all__ = [
    "AccessReport", "AccessRequest", "Ack", "AuthNetwork", "AuthNode", "CapsuleEnvelope", "DataOwner",
    "Denial", "DenialReason", "EncryptedShare", "Fault", "InProcessTransport", "LatencyModel",
    "NetworkConfig", "NodeResponse", "ProvisionMessage", "PublishedRecord", "SealedPayload",
    "decode_frame", "encode_frame", "provision", "request_access",
]

"""Threshold authorization for owner-controlled personal data.

Owners encrypt payloads under a KEM/DEM scheme, store the ciphertext
off-chain, register an ACL record on a simulated ledger and hand capsule
opening material to a (t, n) network of authorization nodes, either as Shamir
shares of the KEM secret key or as proxy re-encryption key fragments.
"""

from .crypto_core import (
    Capsule,
    DemCiphertext,
    KeyPair,
    KeyRole,
    Signature,
    SymmetricKey,
    dem_decrypt,
    dem_encrypt,
    generate_keypair,
    kem_decapsulate,
    kem_encapsulate,
    sign,
    verify,
)
from .groups import DEFAULT_GROUP, SECP256K1, TOY257, GroupParams, Point
from .ledger import Address, DataRecord, Ledger, LedgerEvent, Scheme, replay
from .offchain_store import BlobStore, Digest, StorageRef, make_digest, verify_integrity
from .secret_sharing import CommitmentSet, Share, ThresholdPolicy, reconstruct_secret, split_secret, verify_share
from .threshold_pre import CFrag, KFrag, combine_and_decapsulate, generate_kfrags, reencrypt, verify_cfrag, verify_kfrag

__version__ = "0.1.0"

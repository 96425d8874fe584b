import io
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pimsauth.crypto_core import Signature, generate_keypair
from pimsauth.errors import BadSignature, DecodeError, DuplicateRecord, Unauthorized, UnknownRecord
from pimsauth.groups import SECP256K1, make_rng
from pimsauth.ledger import (
    AclTx,
    Address,
    DeployTx,
    Ledger,
    LedgerEvent,
    Scheme,
    export_events,
    load_events,
    record_id_for,
    replay,
)
from pimsauth.offchain_store import StorageRef, make_digest
from pimsauth.secret_sharing import ThresholdPolicy

RNG = make_rng("ledger-tests")
OWNER = generate_keypair(SECP256K1, rng=RNG)
OTHER = generate_keypair(SECP256K1, rng=RNG)
CONSUMERS = [Address.of(generate_keypair(SECP256K1, rng=RNG).public_key) for _ in range(4)]


def deploy(ledger, owner=OWNER, blob=b"ct", nonce=None, rng=RNG):
    tx = DeployTx.create(owner, StorageRef.of(blob), make_digest(blob, b"pep", rng=rng), Scheme.SS,
                         ThresholdPolicy(2, 3), nonce=nonce, rng=rng)
    return ledger.deploy_record(tx)


def grant(ledger, rid, who, signer=OWNER, rng=RNG):
    return ledger.grant(AclTx.create(signer, "grant", rid, who, rng))


def revoke(ledger, rid, who, signer=OWNER, rng=RNG):
    return ledger.revoke(AclTx.create(signer, "revoke", rid, who, rng))


def test_address_is_deterministic_20_bytes():
    a = Address.of(OWNER.public_key)
    assert a == Address.of(OWNER.public_key) and len(a.value) == 20
    assert a != Address.of(OTHER.public_key)


def test_deploy_and_get():
    ledger = Ledger()
    rid = deploy(ledger, nonce=b"n" * 16)
    rec = ledger.get_record(rid)
    assert rec.acl == frozenset() and rec.owner == Address.of(OWNER.public_key)
    assert rid == record_id_for(rec.owner, rec.storage_ref, b"n" * 16)
    assert ledger.events()[0].kind == "Deploy"


def test_redeploy_same_nonce_is_duplicate():
    ledger = Ledger()
    deploy(ledger, nonce=b"x" * 16)
    with pytest.raises(DuplicateRecord):
        deploy(ledger, nonce=b"x" * 16)


def test_deploy_bad_signature():
    tx = DeployTx.create(OWNER, StorageRef.of(b"a"), make_digest(b"a", b"p"), Scheme.PRE, ThresholdPolicy(1, 1))
    forged = DeployTx(**{**tx.__dict__, "signature": Signature(bytes(len(tx.signature.value)))})
    with pytest.raises(BadSignature):
        Ledger().deploy_record(forged)
    wrong_key = DeployTx(**{**tx.__dict__, "owner_pk": OTHER.public_key})
    with pytest.raises(BadSignature):
        Ledger().deploy_record(wrong_key)


def test_grant_revoke_semantics():
    ledger = Ledger()
    rid = deploy(ledger)
    c = CONSUMERS[0]
    assert not ledger.is_authorized(rid, c)
    grant(ledger, rid, c)
    assert ledger.is_authorized(rid, c)
    head = ledger.head
    grant(ledger, rid, c)  # idempotent acl, still appends
    assert ledger.head == head + 1 and ledger.get_record(rid).acl == {c}
    revoke(ledger, rid, c)
    assert not ledger.is_authorized(rid, c)
    revoke(ledger, rid, CONSUMERS[1])  # absent subject
    assert ledger.get_record(rid).acl == frozenset()


def test_non_owner_mutations_rejected():
    ledger = Ledger()
    rid = deploy(ledger)
    grant(ledger, rid, CONSUMERS[0])
    with pytest.raises(Unauthorized):
        grant(ledger, rid, CONSUMERS[1], signer=OTHER)
    with pytest.raises(Unauthorized):
        revoke(ledger, rid, CONSUMERS[0], signer=OTHER)
    assert ledger.get_record(rid).acl == {CONSUMERS[0]}


def test_unknown_record():
    ledger = Ledger()
    with pytest.raises(UnknownRecord):
        grant(ledger, b"\x00" * 32, CONSUMERS[0])
    with pytest.raises(UnknownRecord):
        ledger.is_authorized(b"\x00" * 32, CONSUMERS[0])


def test_replayed_transaction_rejected():
    ledger = Ledger()
    rid = deploy(ledger)
    tx = AclTx.create(OWNER, "grant", rid, CONSUMERS[0], RNG)
    ledger.grant(tx)
    with pytest.raises(BadSignature):
        ledger.grant(tx)
    with pytest.raises(BadSignature):
        ledger.revoke(tx)  # kind is signed


def test_events_queries():
    ledger = Ledger()
    assert replay([]) == {}
    r1, r2 = deploy(ledger, blob=b"1"), deploy(ledger, blob=b"2")
    grant(ledger, r1, CONSUMERS[0])
    assert [e.seq for e in ledger.events()] == [1, 2, 3]
    assert [e.kind for e in ledger.events(r1)] == ["Deploy", "Grant"]
    assert ledger.events(r2, from_seq=3) == []
    assert ledger.events(from_seq=ledger.head + 1) == []


def test_replay_matches_live_after_1000_random_ops():
    rng = make_rng("replay-1000")
    ledger = Ledger()
    rids = [deploy(ledger, blob=bytes([i]), rng=rng) for i in range(3)]
    snapshots = []
    for _ in range(1000):
        rid, who = rng.choice(rids), rng.choice(CONSUMERS)
        (grant if rng.random() < 0.5 else revoke)(ledger, rid, who, rng=rng)
        events = ledger.events()
        assert replay(events) == ledger.state()
        snapshots.append(events)
    # append-only: every earlier view is a prefix of every later one
    for early, late in zip(snapshots, snapshots[1:]):
        assert late[:len(early)] == early


def test_ndjson_round_trip():
    ledger = Ledger()
    rid = deploy(ledger)
    grant(ledger, rid, CONSUMERS[0])
    revoke(ledger, rid, CONSUMERS[0])
    buf = io.StringIO()
    export_events(ledger.events(), buf)
    lines = buf.getvalue().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith('{"seq":1,"kind":"Deploy"')
    loaded = load_events(io.StringIO(buf.getvalue()))
    assert loaded == ledger.events()
    assert replay(loaded) == ledger.state()
    assert LedgerEvent.from_json(lines[1]).to_json() == lines[1]


def test_replay_rejects_gaps():
    ledger = Ledger()
    deploy(ledger)
    rid = deploy(ledger, blob=b"z")
    grant(ledger, rid, CONSUMERS[0])
    with pytest.raises(DecodeError):
        replay(ledger.events()[1:])


def test_concurrent_writers_are_serialized():
    ledger = Ledger()
    rid = deploy(ledger)
    txs = [AclTx.create(OWNER, "grant", rid, CONSUMERS[i % 4], make_rng(i)) for i in range(40)]
    threads = [threading.Thread(target=ledger.grant, args=(tx,)) for tx in txs]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert [e.seq for e in ledger.events()] == list(range(1, 42))
    assert replay(ledger.events()) == ledger.state()


def test_confirmation_delay():
    ledger = Ledger(confirmation_delay=0.01)
    rid = deploy(ledger)
    assert ledger.get_record(rid)


_OPS = st.lists(st.tuples(st.sampled_from(["grant", "revoke"]), st.booleans(), st.integers(0, 3)), max_size=30)


@settings(max_examples=40, deadline=None)
@given(_OPS)
def test_only_owner_changes_acl(ops):
    ledger = Ledger()
    rng = make_rng(len(ops))
    rid = deploy(ledger, rng=rng)
    for kind, by_owner, who in ops:
        before = ledger.get_record(rid).acl
        fn = grant if kind == "grant" else revoke
        if by_owner:
            fn(ledger, rid, CONSUMERS[who], rng=rng)
        else:
            with pytest.raises(Unauthorized):
                fn(ledger, rid, CONSUMERS[who], signer=OTHER, rng=rng)
            assert ledger.get_record(rid).acl == before
        assert replay(ledger.events()) == ledger.state()

from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from pimsauth.errors import DuplicateIndex, InsufficientShares, InvalidPolicy
from pimsauth.groups import SECP256K1, TOY257, make_rng
from pimsauth.secret_sharing import CommitmentSet, Share, ThresholdPolicy, reconstruct_secret, split_secret, verify_share


def _hand_lagrange_257(points):
    """Plain Lagrange at zero, written out independently of the library."""
    p = 257
    total = 0
    for i, (xi, yi) in enumerate(points):
        num = den = 1
        for j, (xj, _) in enumerate(points):
            if i != j:
                num = num * (-xj) % p
                den = den * (xi - xj) % p
        total += yi * num * pow(den, p - 2, p)
    return total % p


def test_golden_p257_split():
    shares, cs = split_secret(42, ThresholdPolicy(2, 3), TOY257, coefficients=[5])
    assert [(s.index, s.value) for s in shares] == [(1, 47), (2, 52), (3, 57)]
    assert cs.public_key == TOY257.base_mul(42)
    assert all(verify_share(s, cs) for s in shares)


def test_golden_p257_reconstruct():
    pol = ThresholdPolicy(2, 3)
    assert reconstruct_secret([Share(1, 47), Share(3, 57)], pol, 257) == 42
    assert _hand_lagrange_257([(1, 47), (3, 57)]) == 42
    for pair in combinations([Share(1, 47), Share(2, 52), Share(3, 57)], 2):
        assert reconstruct_secret(pair, pol, TOY257) == 42


def test_constant_polynomial():
    shares, _ = split_secret(42, ThresholdPolicy(1, 4), TOY257)
    assert all(s.value == 42 for s in shares)


@pytest.mark.parametrize("t,n", [(4, 3), (0, 3), (0, 0), (1, 0)])
def test_invalid_policy(t, n):
    with pytest.raises(InvalidPolicy):
        ThresholdPolicy(t, n)


def test_secret_out_of_range():
    with pytest.raises(InvalidPolicy):
        split_secret(257, ThresholdPolicy(1, 1), TOY257)


def test_reconstruct_errors():
    shares, _ = split_secret(7, ThresholdPolicy(3, 5), TOY257)
    with pytest.raises(InsufficientShares):
        reconstruct_secret(shares[:2], ThresholdPolicy(3, 5), TOY257)
    with pytest.raises(DuplicateIndex):
        reconstruct_secret([shares[0], shares[0], shares[1]], ThresholdPolicy(3, 5), TOY257)


def test_exhaustive_subsets_n_up_to_8():
    rng = make_rng("ss-exhaustive")
    for n in range(1, 9):
        for t in range(1, n + 1):
            secret = SECP256K1.random_scalar(rng)
            pol = ThresholdPolicy(t, n)
            shares, cs = split_secret(secret, pol, SECP256K1, rng=rng)
            assert cs.commitments[0] == SECP256K1.base_mul(secret)
            for subset in combinations(shares, t):
                assert reconstruct_secret(subset, pol, SECP256K1) == secret
            for subset in combinations(shares, t - 1):
                with pytest.raises(InsufficientShares):
                    reconstruct_secret(subset, pol, SECP256K1)


def test_verify_share():
    shares, cs = split_secret(99, ThresholdPolicy(3, 5), SECP256K1, rng=make_rng(1))
    _, foreign = split_secret(99, ThresholdPolicy(3, 5), SECP256K1, rng=make_rng(2))
    s = shares[2]
    assert verify_share(s, cs)
    assert not verify_share(Share(s.index, s.value + 1, s.commitment_set_id), cs)
    assert not verify_share(Share(s.index, s.value), foreign)
    assert not verify_share(s, foreign)  # bound to its commitment set id
    assert not verify_share(Share(0, s.value), cs)


def test_single_share_is_uniform_chi_squared():
    """With t=2, one share's value is uniform whatever the secret."""
    rng = make_rng("secrecy")
    pol = ThresholdPolicy(2, 3)
    samples = 20 * 257
    for secret in (0, 42, 256):
        counts = [0] * 257
        for _ in range(samples):
            shares, _ = split_secret(secret, pol, TOY257, rng=rng)
            counts[shares[0].value] += 1
        assert stats.chisquare(counts).pvalue > 1e-3


def test_candidate_secrets_uniform_given_one_share():
    """Fix share (1, y); over fresh slopes the implied secret is uniform on GF(257)."""
    rng = make_rng("secrecy-2")
    y, counts = 123, [0] * 257
    for _ in range(20 * 257):
        slope = rng.randrange(257)
        secret = (y - slope) % 257
        shares, _ = split_secret(secret, ThresholdPolicy(2, 2), TOY257, coefficients=[slope])
        assert shares[0].value == y
        counts[reconstruct_secret(shares, ThresholdPolicy(2, 2), TOY257)] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, SECP256K1.order - 1), st.integers(1, 8), st.data())
def test_homomorphic_consistency(secret, n, data):
    t = data.draw(st.integers(1, n))
    pol = ThresholdPolicy(t, n)
    shares, cs = split_secret(secret, pol, SECP256K1, rng=make_rng(secret))
    chosen = data.draw(st.permutations(shares))[:t]
    assert SECP256K1.base_mul(reconstruct_secret(chosen, pol, SECP256K1)) == cs.commitments[0]
    assert all(verify_share(s, cs) for s in chosen)


def test_serialization():
    shares, cs = split_secret(42, ThresholdPolicy(2, 3), SECP256K1, coefficients=[5])
    raw = shares[0].to_bytes(SECP256K1)
    assert raw.hex() == "00000001" + "00" * 31 + "2f"
    assert Share.from_bytes(raw, SECP256K1, cs.id) == shares[0]
    back = CommitmentSet.from_bytes(cs.to_bytes(), SECP256K1)
    assert back == cs
    assert cs.id.hex() == "67a5f14f2c3a0bf2ed91bf522043bef0f6335045a0d65c4b47ae2ba967835f6d"

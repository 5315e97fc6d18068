import random

import pytest

from mailvote.algebra import DEFAULT_Q, G1, setup
from mailvote.elgamal import (
    ChaumPedersenProof,
    DecryptionShare,
    TrusteeShare,
    combine,
    encrypt,
    keygen,
    lagrange_at_zero,
    mul_ciphertexts,
    partial_decrypt,
    verify_share,
)
from mailvote.errors import GroupError, ShareError


@pytest.fixture
def params():
    return setup(q=DEFAULT_Q, h2_dlog=99)


def commits(shares):
    return {s.index: s.public_commit for s in shares}


def test_keygen_single_trustee(params):
    pk, shares = keygen(params, 1, 1, random.Random(1))
    # degree-0 polynomial: the lone share is the secret itself
    assert len(shares) == 1
    assert pk == params.exp(params.g1, shares[0].secret)


def test_keygen_bad_threshold(params):
    with pytest.raises(ValueError):
        keygen(params, 0, 3)
    with pytest.raises(ValueError):
        keygen(params, 4, 3)


def test_shamir_reconstruction_by_hand():
    # hand-built polynomial f(i) = 17 + 3i mod 101, threshold 2
    params = setup(q=101, h2_dlog=5)
    secret = 17
    shares = [TrusteeShare(i, (17 + 3 * i) % 101, params.exp(params.g1, (17 + 3 * i) % 101))
              for i in (1, 2, 3)]
    for subset in ([1, 2], [1, 3], [2, 3]):
        lam = lagrange_at_zero(params, subset)
        got = sum(lam[i] * ((17 + 3 * i) % 101) for i in subset) % 101
        assert got == secret


def test_any_two_of_three_decrypt_single_fails(params):
    rng = random.Random(2)
    pk, shares = keygen(params, 2, 3, rng)
    M = params.random_element(G1, rng)
    ct = encrypt(params, pk, M, params.random_scalar(rng))
    ds = [partial_decrypt(params, s, ct) for s in shares]
    pc = commits(shares)
    assert combine(params, ct, [ds[0], ds[2]], pc, 2) == M
    assert combine(params, ct, [ds[1], ds[2]], pc, 2) == M
    with pytest.raises(ShareError):
        combine(params, ct, [ds[0]], pc, 2)
    # a single share combined alone (even bypassing the count) is not M
    lam = lagrange_at_zero(params, [1])
    alone = params.div(ct.c2, params.exp(ds[0].share, lam[1]))
    assert alone != M


def test_encrypt_degenerate_randomness(params):
    pk, _ = keygen(params, 1, 1, random.Random(3))
    M = params.element(G1, 77)
    ct = encrypt(params, pk, M, 0)
    assert ct.c1 == params.identity(G1)
    assert ct.c2 == M


def test_encrypt_rejects_wrong_group(params):
    pk, _ = keygen(params, 1, 1, random.Random(4))
    with pytest.raises(GroupError):
        encrypt(params, pk, params.g2, 5)


def test_homomorphism(params):
    rng = random.Random(5)
    pk, shares = keygen(params, 2, 3, rng)
    m1, m2 = params.random_element(G1, rng), params.random_element(G1, rng)
    r1, r2 = params.random_scalar(rng), params.random_scalar(rng)
    combined = mul_ciphertexts(params, encrypt(params, pk, m1, r1),
                               encrypt(params, pk, m2, r2))
    assert combined == encrypt(params, pk, params.mul(m1, m2), r1 + r2)
    ds = [partial_decrypt(params, s, combined) for s in shares[:2]]
    assert combine(params, combined, ds, commits(shares), 2) == params.mul(m1, m2)


def test_roundtrip_many(params):
    rng = random.Random(6)
    pk, shares = keygen(params, 2, 3, rng)
    pc = commits(shares)
    for _ in range(500):
        M = params.random_element(G1, rng)
        ct = encrypt(params, pk, M, params.random_scalar(rng))
        ds = [partial_decrypt(params, s, ct) for s in shares[:2]]
        assert combine(params, ct, ds, pc, 2) == M


def test_share_proof_honest_and_tampered(params):
    rng = random.Random(7)
    pk, shares = keygen(params, 2, 3, rng)
    ct = encrypt(params, pk, params.random_element(G1, rng), params.random_scalar(rng))
    d = partial_decrypt(params, shares[0], ct)
    assert verify_share(params, shares[0].public_commit, ct, d)
    bad = DecryptionShare(d.index, params.mul(d.share, params.g1), d.proof)
    assert not verify_share(params, shares[0].public_commit, ct, bad)


def test_share_proof_any_field_tamper_fails(params):
    rng = random.Random(8)
    pk, shares = keygen(params, 2, 3, rng)
    ct = encrypt(params, pk, params.random_element(G1, rng), params.random_scalar(rng))
    d = partial_decrypt(params, shares[1], ct)
    p = d.proof
    variants = [
        DecryptionShare(d.index, params.mul(d.share, params.g1), p),
        DecryptionShare(d.index, d.share,
                        ChaumPedersenProof(params.mul(p.t1, params.g1), p.t2,
                                           p.challenge, p.response)),
        DecryptionShare(d.index, d.share,
                        ChaumPedersenProof(p.t1, params.mul(p.t2, ct.c1),
                                           p.challenge, p.response)),
        DecryptionShare(d.index, d.share,
                        ChaumPedersenProof(p.t1, p.t2, p.challenge ^ 1, p.response)),
        DecryptionShare(d.index, d.share,
                        ChaumPedersenProof(p.t1, p.t2, p.challenge,
                                           (p.response + 1) % params.q)),
    ]
    for bad in variants:
        assert not verify_share(params, shares[1].public_commit, ct, bad)


def test_proof_transcript_deterministic(params):
    rng = random.Random(9)
    pk, shares = keygen(params, 2, 3, rng)
    ct = encrypt(params, pk, params.random_element(G1, rng), params.random_scalar(rng))
    assert partial_decrypt(params, shares[0], ct) == partial_decrypt(params, shares[0], ct)


def test_combine_names_offending_index(params):
    rng = random.Random(10)
    pk, shares = keygen(params, 2, 3, rng)
    ct = encrypt(params, pk, params.random_element(G1, rng), params.random_scalar(rng))
    good = partial_decrypt(params, shares[0], ct)
    evil = partial_decrypt(params, shares[2], ct)
    evil = DecryptionShare(evil.index, params.mul(evil.share, params.g1), evil.proof)
    with pytest.raises(ShareError) as err:
        combine(params, ct, [good, evil], commits(shares), 2)
    assert err.value.index == 3


def test_combine_rejects_duplicate_indices(params):
    rng = random.Random(11)
    pk, shares = keygen(params, 2, 3, rng)
    ct = encrypt(params, pk, params.random_element(G1, rng), params.random_scalar(rng))
    d = partial_decrypt(params, shares[0], ct)
    with pytest.raises(ShareError):
        combine(params, ct, [d, d], commits(shares), 2)


def test_share_serialization_roundtrip(params):
    rng = random.Random(12)
    pk, shares = keygen(params, 2, 3, rng)
    ct = encrypt(params, pk, params.random_element(G1, rng), params.random_scalar(rng))
    d = partial_decrypt(params, shares[0], ct)
    assert DecryptionShare.from_dict(params, d.to_dict(params)) == d

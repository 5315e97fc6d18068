import dataclasses
import random

import pytest

from mailvote import cce
from mailvote.algebra import DEFAULT_Q, G1, G2, setup
from mailvote.elgamal import keygen, partial_decrypt, combine
from mailvote.errors import GroupError, InvalidVote


@pytest.fixture
def small():
    return setup(q=101, h2_dlog=5)


@pytest.fixture
def ctx():
    params = setup(q=DEFAULT_Q, h2_dlog=424242)
    rng = random.Random(100)
    pk, shares = keygen(params, 2, 3, rng)
    return params, pk, shares, rng


def open_via_trustees(params, pk, shares, cell, valid_set):
    ds = [partial_decrypt(params, s, cell.ciphertext) for s in shares[:2]]
    s_elem = combine(params, cell.ciphertext, ds,
                     {s.index: s.public_commit for s in shares}, 2)
    return cce.open_value(params, cell.commitment, s_elem, valid_set).m


def test_degenerate_cell(small):
    pk = small.exp(small.g1, 9)
    cell = cce.commit_encrypt(small, pk, 0, 0, 0)
    assert cell.commitment == small.identity(G2)
    assert cell.ciphertext.c1 == small.identity(G1)
    assert cell.ciphertext.c2 == small.identity(G1)


def test_commitment_spot_value(small):
    # dlog oracle: s + m*dlog(h2) = 7 + 2*5 = 17 mod 101
    pk = small.exp(small.g1, 33)
    cell = cce.commit_encrypt(small, pk, 2, 7, 3)
    assert cell.commitment.value == 17


def test_homomorphic_add(small):
    pk = small.exp(small.g1, 33)
    a = cce.commit_encrypt(small, pk, 2, 7, 3)
    b = cce.commit_encrypt(small, pk, 4, 11, 6)
    c = cce.add(small, a, b)
    assert c.commitment == small.mul(small.exp(small.g2, 18), small.exp(small.h2, 6))
    assert c.opening.s == 18 and c.opening.m == 6 and c.opening.r == 9


def test_add_identity_and_abstentions(ctx):
    params, pk, shares, rng = ctx
    a = cce.commit_encrypt(params, pk, 5, params.random_scalar(rng), params.random_scalar(rng))
    ident = cce.identity_cell(params, pk)
    assert cce.add(params, a, ident).commitment == a.commitment
    acc = cce.commit_encrypt(params, pk, 0, params.random_scalar(rng), params.random_scalar(rng))
    for _ in range(2):
        acc = cce.add(params, acc, cce.commit_encrypt(
            params, pk, 0, params.random_scalar(rng), params.random_scalar(rng)))
    assert acc.opening.m == 0
    assert open_via_trustees(params, pk, shares, acc, [0, 1, 2]) == 0


def test_rerandomize_identity_and_invariance(ctx):
    params, pk, shares, rng = ctx
    cell = cce.commit_encrypt(params, pk, 3, params.random_scalar(rng),
                              params.random_scalar(rng))
    same = cce.rerandomize(params, pk, cell, 0, 0)
    assert same.commitment == cell.commitment and same.ciphertext == cell.ciphertext
    blind = cce.rerandomize(params, pk, cell, params.random_scalar(rng),
                            params.random_scalar(rng))
    assert params.encode(blind.commitment) != params.encode(cell.commitment)
    assert open_via_trustees(params, pk, shares, blind, [0, 1, 2, 3]) == 3


def test_open_roundtrip_and_soundness(ctx):
    params, pk, shares, rng = ctx
    cell = cce.commit_encrypt(params, pk, 4, params.random_scalar(rng),
                              params.random_scalar(rng))
    assert open_via_trustees(params, pk, shares, cell, [0, 1, 2, 4]) == 4
    tampered = dataclasses.replace(cell, commitment=params.mul(cell.commitment, params.g2))
    with pytest.raises(InvalidVote):
        open_via_trustees(params, pk, shares, tampered, [0, 1, 2, 4])


def test_open_zero(ctx):
    params, pk, shares, rng = ctx
    cell = cce.commit_encrypt(params, pk, 0, params.random_scalar(rng),
                              params.random_scalar(rng))
    assert open_via_trustees(params, pk, shares, cell, [0, 1]) == 0


def test_open_requires_proper_groups(ctx):
    params, pk, _, rng = ctx
    with pytest.raises(GroupError):
        cce.open_value(params, params.g1, params.g1, [0])
    with pytest.raises(GroupError):
        cce.open_value(params, params.g2, params.g2, [0])


def test_consistency_many(ctx):
    params, pk, shares, rng = ctx
    valid = list(range(10))
    for _ in range(500):
        m = rng.randrange(10)
        cell = cce.commit_encrypt(params, pk, m, params.random_scalar(rng),
                                  params.random_scalar(rng))
        assert open_via_trustees(params, pk, shares, cell, valid) == m


def test_homomorphic_open(ctx):
    params, pk, shares, rng = ctx
    a = cce.commit_encrypt(params, pk, 1, params.random_scalar(rng), params.random_scalar(rng))
    b = cce.commit_encrypt(params, pk, 3, params.random_scalar(rng), params.random_scalar(rng))
    assert open_via_trustees(params, pk, shares, cce.add(params, a, b), [0, 1, 3, 4]) == 4


def test_alternate_opening_formula(small):
    pk = small.exp(small.g1, 33)
    cell = cce.commit_encrypt(small, pk, 2, 7, 3)
    s_zero = cce.alternate_opening(small, cell.commitment, 0)
    assert s_zero == (7 + 2 * 5) % 101  # s + m*dlog(h2)
    for m_alt in range(11):
        s_alt = cce.alternate_opening(small, cell.commitment, m_alt)
        assert cce.check_opening(small, cell.commitment, s_alt, m_alt)


def test_alternate_opening_needs_transparent_backend(small):
    opaque = dataclasses.replace(small, backend="bls12-381")
    with pytest.raises(GroupError):
        cce.alternate_opening(opaque, small.g2, 0)


def test_perfect_hiding_all_weights(ctx):
    params, pk, _, rng = ctx
    for _ in range(100):
        m = rng.randrange(5)
        cell = cce.commit_encrypt(params, pk, m, params.random_scalar(rng),
                                  params.random_scalar(rng))
        for m_alt in range(11):
            s_alt = cce.alternate_opening(params, cell.commitment, m_alt)
            assert cce.check_opening(params, cell.commitment, s_alt, m_alt)

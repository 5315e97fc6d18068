"""t-of-n threshold ElGamal over G1 with verifiable partial decryption.

Key generation is trusted-dealer Shamir sharing. Decryption shares carry a
Chaum-Pedersen equal-dlog proof (Fiat-Shamir, domain "cpdec") so the tally
stays publicly checkable; the proof nonce is derived deterministically from
the share secret and the statement, making transcripts reproducible without
an rng argument.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import G1, GroupElement, GroupParams
from .errors import GroupError, ShareError


@dataclass(frozen=True)
class TrusteeShare:
    index: int
    secret: int
    public_commit: GroupElement  # g1^secret


@dataclass(frozen=True)
class ElgCiphertext:
    c1: GroupElement  # g1^r
    c2: GroupElement  # pk^r * M

    def encode(self, params: GroupParams) -> bytes:
        return params.encode(self.c1) + params.encode(self.c2)

    def to_dict(self, params: GroupParams) -> dict:
        return {"c1": params.encode_hex(self.c1), "c2": params.encode_hex(self.c2)}

    @classmethod
    def from_dict(cls, params: GroupParams, d: dict) -> "ElgCiphertext":
        return cls(params.decode_hex(d["c1"]), params.decode_hex(d["c2"]))


@dataclass(frozen=True)
class ChaumPedersenProof:
    """Transcript for log_g1(public_commit) = log_c1(share)."""

    t1: GroupElement
    t2: GroupElement
    challenge: int
    response: int

    def to_dict(self, params: GroupParams) -> dict:
        return {
            "t1": params.encode_hex(self.t1),
            "t2": params.encode_hex(self.t2),
            "e": format(self.challenge, "x"),
            "z": format(self.response, "x"),
        }

    @classmethod
    def from_dict(cls, params: GroupParams, d: dict) -> "ChaumPedersenProof":
        return cls(
            params.decode_hex(d["t1"]),
            params.decode_hex(d["t2"]),
            int(d["e"], 16),
            int(d["z"], 16),
        )


@dataclass(frozen=True)
class DecryptionShare:
    index: int
    share: GroupElement  # c1^secret_i
    proof: ChaumPedersenProof

    def to_dict(self, params: GroupParams) -> dict:
        return {
            "index": self.index,
            "share": params.encode_hex(self.share),
            "proof": self.proof.to_dict(params),
        }

    @classmethod
    def from_dict(cls, params: GroupParams, d: dict) -> "DecryptionShare":
        return cls(d["index"], params.decode_hex(d["share"]),
                   ChaumPedersenProof.from_dict(params, d["proof"]))


def keygen(params: GroupParams, t: int, n: int, rng=None):
    """Deal a Shamir sharing of a fresh secret x; returns (pk, shares).

    Any t shares reconstruct; t-1 reveal nothing about x beyond the public
    commitments. Share indices run 1..n.
    """
    if t < 1 or t > n:
        raise ValueError(f"threshold t={t} must satisfy 1 <= t <= n={n}")
    if n >= params.q:
        raise ValueError("trustee count must be below the group order")
    coeffs = [params.random_scalar(rng) for _ in range(t)]
    x = coeffs[0]
    pk = params.exp(params.g1, x)
    shares = []
    for i in range(1, n + 1):
        acc = 0
        for c in reversed(coeffs):  # Horner at point i
            acc = (acc * i + c) % params.q
        shares.append(TrusteeShare(i, acc, params.exp(params.g1, acc)))
    return pk, shares


def encrypt(params: GroupParams, pk: GroupElement, message: GroupElement,
            r: int) -> ElgCiphertext:
    """Encrypt a G1 element under pk with caller-supplied randomness r.

    r is never sampled here; ballots feed it from their seeded stream so the
    whole ciphertext layer is reproducible from R.
    """
    if message.group != G1:
        raise GroupError("ElGamal messages must live in G1")
    if pk.group != G1:
        raise GroupError("public key must live in G1")
    return ElgCiphertext(params.exp(params.g1, r),
                         params.mul(params.exp(pk, r), message))


def mul_ciphertexts(params: GroupParams, a: ElgCiphertext, b: ElgCiphertext) -> ElgCiphertext:
    """Componentwise product: encryption of M_a * M_b under randomness r_a + r_b."""
    return ElgCiphertext(params.mul(a.c1, b.c1), params.mul(a.c2, b.c2))


def _cp_challenge(params: GroupParams, public_commit, c1, share, t1, t2) -> int:
    return params.hash_scalar(
        "cpdec",
        params.encode(params.g1),
        params.encode(public_commit),
        params.encode(c1),
        params.encode(share),
        params.encode(t1),
        params.encode(t2),
    )


def partial_decrypt(params: GroupParams, trustee: TrusteeShare,
                    ct: ElgCiphertext) -> DecryptionShare:
    """Produce c1^secret_i plus a Chaum-Pedersen proof it matches public_commit."""
    share = params.exp(ct.c1, trustee.secret)
    w = params.hash_scalar(
        "rv/cpnonce",
        params.scalar_bytes(trustee.secret),
        params.encode(ct.c1),
        params.encode(ct.c2),
    )
    t1 = params.exp(params.g1, w)
    t2 = params.exp(ct.c1, w)
    e = _cp_challenge(params, trustee.public_commit, ct.c1, share, t1, t2)
    z = (w + e * trustee.secret) % params.q
    return DecryptionShare(trustee.index, share, ChaumPedersenProof(t1, t2, e, z))


def verify_share(params: GroupParams, public_commit: GroupElement,
                 ct: ElgCiphertext, dshare: DecryptionShare) -> bool:
    p = dshare.proof
    if p.challenge != _cp_challenge(params, public_commit, ct.c1, dshare.share, p.t1, p.t2):
        return False
    lhs1 = params.exp(params.g1, p.response)
    rhs1 = params.mul(p.t1, params.exp(public_commit, p.challenge))
    lhs2 = params.exp(ct.c1, p.response)
    rhs2 = params.mul(p.t2, params.exp(dshare.share, p.challenge))
    return lhs1 == rhs1 and lhs2 == rhs2


def lagrange_at_zero(params: GroupParams, indices: list[int]) -> dict[int, int]:
    """Lagrange coefficients lambda_i for interpolation at 0 over `indices`."""
    coeffs = {}
    for i in indices:
        num, den = 1, 1
        for j in indices:
            if j != i:
                num = (num * (-j)) % params.q
                den = (den * (i - j)) % params.q
        coeffs[i] = (num * pow(den, -1, params.q)) % params.q
    return coeffs


def combine(params: GroupParams, ct: ElgCiphertext, dshares: list[DecryptionShare],
            public_commits: dict[int, GroupElement], t: int) -> GroupElement:
    """Lagrange-combine verified shares to recover M = c2 / c1^x.

    Raises ShareError naming the first offending index if any proof fails,
    and on duplicate indices or fewer than t shares.
    """
    indices = [s.index for s in dshares]
    if len(set(indices)) != len(indices):
        raise ShareError("duplicate share indices")
    if len(dshares) < t:
        raise ShareError(f"need at least {t} shares, got {len(dshares)}")
    for s in dshares:
        commit = public_commits.get(s.index)
        if commit is None:
            raise ShareError(f"no public commitment for trustee {s.index}", s.index)
        if not verify_share(params, commit, ct, s):
            raise ShareError(f"invalid decryption share from trustee {s.index}", s.index)
    lam = lagrange_at_zero(params, indices)
    acc = params.identity(G1)
    for s in dshares:
        acc = params.mul(acc, params.exp(s.share, lam[s.index]))
    return params.div(ct.c2, acc)

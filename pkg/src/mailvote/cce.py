"""Commitment-consistent encryption cells.

A cell pairs a perfectly hiding Pedersen commitment in G2 (g2^s * h2^m, with
m the vote weight) with an ElGamal ciphertext in G1 encrypting g1^s. The
commitment is the only public face; it can be added and re-randomized like
the ciphertext, and once the ciphertext is threshold-decrypted to g1^s the
commitment opens to m through the pairing check

    e(g1, commitment) == e(g1^s, g2) * e(g1, h2)^m.

Because the commitment is perfectly hiding, any weight is consistent with it
until opening; `alternate_opening` demonstrates this constructively in the
transparent backend.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import G1, G2, TRANSPARENT, GroupElement, GroupParams
from .elgamal import ElgCiphertext, encrypt, mul_ciphertexts
from .errors import GroupError, InvalidVote


@dataclass(frozen=True)
class CellOpening:
    """Authority-private side of a cell."""

    s: int  # commitment randomness (256-bit true randomness reduced mod q)
    m: int  # vote weight
    r: int  # ElGamal randomness


@dataclass(frozen=True)
class CCECell:
    commitment: GroupElement
    ciphertext: ElgCiphertext
    opening: CellOpening | None = None

    def public(self) -> "CCECell":
        return CCECell(self.commitment, self.ciphertext, None)


@dataclass(frozen=True)
class OpenedValue:
    m: int
    s_elem: GroupElement  # g1^s recovered by threshold decryption


def commit_encrypt(params: GroupParams, pk: GroupElement, m: int, s: int,
                   r: int) -> CCECell:
    """Build a cell committing to weight m with randomness s, ciphertext randomness r."""
    commitment = params.mul(params.exp(params.g2, s), params.exp(params.h2, m))
    ciphertext = encrypt(params, pk, params.exp(params.g1, s), r)
    return CCECell(commitment, ciphertext, CellOpening(s % params.q, m, r % params.q))


def add(params: GroupParams, a: CCECell, b: CCECell) -> CCECell:
    """Componentwise product; openings add when both private sides are known."""
    opening = None
    if a.opening is not None and b.opening is not None:
        opening = CellOpening(
            (a.opening.s + b.opening.s) % params.q,
            a.opening.m + b.opening.m,
            (a.opening.r + b.opening.r) % params.q,
        )
    return CCECell(
        params.mul(a.commitment, b.commitment),
        mul_ciphertexts(params, a.ciphertext, b.ciphertext),
        opening,
    )


def identity_cell(params: GroupParams, pk: GroupElement) -> CCECell:
    return commit_encrypt(params, pk, 0, 0, 0)


def rerandomize(params: GroupParams, pk: GroupElement, cell: CCECell, s2: int,
                r2: int) -> CCECell:
    """Blind a cell with fresh (s2, r2); it still opens to the same m."""
    opening = None
    if cell.opening is not None:
        opening = CellOpening(
            (cell.opening.s + s2) % params.q,
            cell.opening.m,
            (cell.opening.r + r2) % params.q,
        )
    return CCECell(
        rerandomize_commitment(params, cell.commitment, s2),
        mul_ciphertexts(params, cell.ciphertext,
                        encrypt(params, pk, params.exp(params.g1, s2), r2)),
        opening,
    )


def rerandomize_commitment(params: GroupParams, commitment: GroupElement,
                           s2: int) -> GroupElement:
    """Commitment half of rerandomize; the public mix linkage check uses this."""
    return params.mul(commitment, params.exp(params.g2, s2))


def open_value(params: GroupParams, commitment: GroupElement,
               s_elem: GroupElement, valid_set) -> OpenedValue:
    """Find the unique admissible m consistent with the commitment.

    s_elem is g1^s from threshold decryption of the cell ciphertext. Raises
    InvalidVote when no admissible weight satisfies the pairing check; per
    the tally rules that flags (and only affects) the single cell.
    """
    if commitment.group != G2:
        raise GroupError("commitment must live in G2")
    if s_elem.group != G1:
        raise GroupError("decrypted value must live in G1")
    lhs = params.pairing(params.g1, commitment)
    base = params.pairing(s_elem, params.g2)
    step = params.pairing(params.g1, params.h2)
    for m in valid_set:
        if params.mul(base, params.exp(step, m)) == lhs:
            return OpenedValue(m, s_elem)
    raise InvalidVote("no admissible weight matches this commitment")


def alternate_opening(params: GroupParams, commitment: GroupElement,
                      m_alt: int) -> int:
    """Transparent-backend oracle: randomness s' opening the commitment as m_alt.

    Exists for every m_alt because the commitment is perfectly hiding; the
    commitment alone pins down no weight. Errors on any backend that does not
    expose discrete logs.
    """
    if params.backend != TRANSPARENT:
        raise GroupError("alternate_opening needs the transparent backend's dlog oracle")
    return (params.dlog(commitment) - m_alt * params.h2_dlog) % params.q


def check_opening(params: GroupParams, commitment: GroupElement, s: int, m: int) -> bool:
    """Does (s, m) open the commitment?"""
    return params.mul(params.exp(params.g2, s), params.exp(params.h2, m)) == commitment

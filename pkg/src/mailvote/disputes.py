"""Collection accountability, ballot keypairs, disclaimers, adjudication.

A voter who selects a candidate scratches that row's panel and learns a
16-byte prefix of the cell's private ciphertext. If the published receipt
misrepresents their selection, they post that prefix as evidence. The
authority answers by opening the disputed cell: revealing its full
ciphertext with a proof that the (commitment, ciphertext) pair is consistent
and encodes an admissible weight. Adjudication is then a pure function of
the two posted records: an invalid proof loses for the authority outright; a
prefix match proves the voter saw under that scratch panel and vindicates
them; otherwise the authority stands.

The disputed cell is identified by its shortcode: that is the only public
handle for a cell (candidate order never appears on the board), so any third
party can resolve it against the ballot's publication.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import board as board_mod
from .algebra import G1, GroupElement, GroupParams
from .board import BoardLog
from .elgamal import ElgCiphertext
from .encoding import canonical_json
from .errors import ProtocolError

log = logging.getLogger(__name__)

PARTIAL_BYTES = 16

VERDICT_VOTER_PROVEN = "VoterProven"
VERDICT_AUTHORITY_VINDICATED = "AuthorityVindicated"
VERDICT_RESPONSE_INVALID = "ResponseInvalid"


class EvidenceError(ProtocolError):
    pass


# ---------------------------------------------------------------------------
# per-ballot signing keys (Schnorr over G1)


def gen_ballot_keypair(params: GroupParams, rng=None) -> tuple[int, GroupElement]:
    secret = params.random_scalar(rng)
    return secret, params.exp(params.g1, secret)


def sign(params: GroupParams, secret: int, message: bytes) -> dict:
    """Schnorr signature with a deterministic nonce; transcripts are stable."""
    vk = params.exp(params.g1, secret)
    w = params.hash_scalar("rv/signonce", params.scalar_bytes(secret), message)
    commit = params.exp(params.g1, w)
    e = params.hash_scalar("rv/sig", params.encode(vk), params.encode(commit), message)
    z = (w + e * secret) % params.q
    return {"commit": params.encode_hex(commit), "z": format(z, "x")}


def verify_signature(params: GroupParams, vk: GroupElement, message: bytes,
                     signature: dict) -> bool:
    try:
        commit = params.decode_hex(signature["commit"])
        z = int(signature["z"], 16)
    except (KeyError, ValueError):
        return False
    e = params.hash_scalar("rv/sig", params.encode(vk), params.encode(commit), message)
    return params.exp(params.g1, z) == params.mul(commit, params.exp(vk, e))


# ---------------------------------------------------------------------------
# partial-encryption evidence


@dataclass(frozen=True)
class PartialEvidence:
    ballot_id: str
    serial: str
    cell_contest_id: str
    shortcode: str
    partial_hex: str  # first 16 bytes of the cell's ciphertext encoding

    def message(self) -> bytes:
        return canonical_json({
            "ballot_id": self.ballot_id,
            "serial": self.serial,
            "cell_contest_id": self.cell_contest_id,
            "shortcode": self.shortcode,
            "partial": self.partial_hex,
        }).encode()


def file_challenge(board: BoardLog, params: GroupParams, evidence: PartialEvidence,
                   signature: dict | None = None,
                   verification_key: GroupElement | None = None):
    """Post a collection-accountability challenge verbatim.

    When ballot keypairs are enabled the evidence must be signed by the
    ballot's published verification key; an unsigned or missigned challenge
    is rejected before it reaches the board.
    """
    if len(bytes.fromhex(evidence.partial_hex)) != PARTIAL_BYTES:
        raise EvidenceError(f"partial must be exactly {PARTIAL_BYTES} bytes")
    body = {
        "ballot_id": evidence.ballot_id,
        "serial": evidence.serial,
        "cell_contest_id": evidence.cell_contest_id,
        "shortcode": evidence.shortcode,
        "partial": evidence.partial_hex,
    }
    if verification_key is not None:
        if signature is None:
            raise EvidenceError("this election requires signed challenges")
        if not verify_signature(params, verification_key, evidence.message(), signature):
            raise EvidenceError("challenge signature does not verify")
        body["signature"] = signature
    return board.append(board_mod.KIND_CHALLENGE_RECORD, body)


# ---------------------------------------------------------------------------
# validity proof: OR-composed proof that a revealed (commitment, ciphertext)
# pair is consistent and commits to an admissible weight.
#
# Per branch (candidate weight m): knowledge of (s, r) with
#   commitment * h2^-m = g2^s,  c1 = g1^r,  c2 = pk^r * g1^s.
# Standard CDS simulation makes all but the real branch; branch challenges
# sum to the Fiat-Shamir master challenge (domain "rv/valid").


def _branch_commits(params: GroupParams, pk, x1, c1, c2, e, z_s, z_r):
    """T values satisfying the verification equations for challenge e."""
    t1 = params.div(params.exp(params.g2, z_s), params.exp(x1, e))
    t2 = params.div(params.exp(params.g1, z_r), params.exp(c1, e))
    t3 = params.div(params.mul(params.exp(pk, z_r), params.exp(params.g1, z_s)),
                    params.exp(c2, e))
    return t1, t2, t3


def _statement_parts(params: GroupParams, pk, commitment, ct, weights):
    return [
        params.encode(pk),
        params.encode(commitment),
        ct.encode(params),
        b"".join(params.scalar_bytes(m) for m in weights),
    ]


def make_validity_proof(params: GroupParams, pk: GroupElement,
                        commitment: GroupElement, ct: ElgCiphertext,
                        weights: list[int], s: int, r: int, m: int) -> dict:
    """Prove the cell's weight lies in `weights` without revealing which."""
    if m not in weights:
        raise EvidenceError("true weight is not in the admissible set")
    real = weights.index(m)
    seed_parts = _statement_parts(params, pk, commitment, ct, weights)
    branches = []
    e_sum = 0
    for i, w_i in enumerate(weights):
        x1 = params.div(commitment, params.exp(params.h2, w_i))
        if i == real:
            branches.append(None)  # filled after the master challenge is known
            continue
        e = params.hash_scalar("rv/valid-sim", *seed_parts, params.scalar_bytes(i),
                               params.scalar_bytes(1))
        z_s = params.hash_scalar("rv/valid-sim", *seed_parts, params.scalar_bytes(i),
                                 params.scalar_bytes(2))
        z_r = params.hash_scalar("rv/valid-sim", *seed_parts, params.scalar_bytes(i),
                                 params.scalar_bytes(3))
        t1, t2, t3 = _branch_commits(params, pk, x1, ct.c1, ct.c2, e, z_s, z_r)
        branches.append({"e": e, "z_s": z_s, "z_r": z_r, "t": (t1, t2, t3)})
        e_sum = (e_sum + e) % params.q

    w_s = params.hash_scalar("rv/valid-nonce", params.scalar_bytes(s), *seed_parts,
                             params.scalar_bytes(1))
    w_r = params.hash_scalar("rv/valid-nonce", params.scalar_bytes(r), *seed_parts,
                             params.scalar_bytes(2))
    t1 = params.exp(params.g2, w_s)
    t2 = params.exp(params.g1, w_r)
    t3 = params.mul(params.exp(pk, w_r), params.exp(params.g1, w_s))
    branches[real] = {"t": (t1, t2, t3)}

    all_t = [elem for b in branches for elem in b["t"]]
    master = params.hash_scalar("rv/valid", *seed_parts,
                                *[params.encode(t) for t in all_t])
    e_real = (master - e_sum) % params.q
    branches[real]["e"] = e_real
    branches[real]["z_s"] = (w_s + e_real * s) % params.q
    branches[real]["z_r"] = (w_r + e_real * r) % params.q

    return {
        "weights": [format(w, "x") for w in weights],
        "branches": [
            {
                "e": format(b["e"], "x"),
                "z_s": format(b["z_s"], "x"),
                "z_r": format(b["z_r"], "x"),
                "t": [params.encode_hex(t) for t in b["t"]],
            }
            for b in branches
        ],
    }


def verify_validity_proof(params: GroupParams, pk: GroupElement,
                          commitment: GroupElement, ct: ElgCiphertext,
                          proof: dict) -> bool:
    try:
        weights = [int(w, 16) for w in proof["weights"]]
        branches = proof["branches"]
        if len(branches) != len(weights) or not weights:
            return False
        seed_parts = _statement_parts(params, pk, commitment, ct, weights)
        all_t = []
        e_sum = 0
        for b in branches:
            all_t.extend(params.decode_hex(t) for t in b["t"])
            e_sum = (e_sum + int(b["e"], 16)) % params.q
        master = params.hash_scalar("rv/valid", *seed_parts,
                                    *[params.encode(t) for t in all_t])
        if e_sum != master:
            return False
        for w_i, b in zip(weights, branches):
            e = int(b["e"], 16)
            z_s = int(b["z_s"], 16)
            z_r = int(b["z_r"], 16)
            x1 = params.div(commitment, params.exp(params.h2, w_i))
            t1, t2, t3 = _branch_commits(params, pk, x1, ct.c1, ct.c2, e, z_s, z_r)
            got = [params.decode_hex(t) for t in b["t"]]
            if [t1, t2, t3] != got:
                return False
        return True
    except (KeyError, ValueError, TypeError):
        return False


# ---------------------------------------------------------------------------
# authority response and third-party adjudication


def response_body(params: GroupParams, challenge_body: dict, ct: ElgCiphertext,
                  validity_proof: dict | None) -> dict:
    """Open the disputed cell: its commitment is already public, so only the
    ciphertext and the validity proof are added.

    Opening an unselected cell spends everlasting receipt freeness for this
    ballot (the revealed encryption decodes once assumptions fail), so the
    loss is logged loudly rather than silently accepted.
    """
    log.warning(
        "dispute response reveals the encryption under ballot %s / code %s; "
        "everlasting receipt freeness is lost for that cell",
        challenge_body["ballot_id"], challenge_body["shortcode"],
    )
    body = {
        "ballot_id": challenge_body["ballot_id"],
        "serial": challenge_body["serial"],
        "cell_contest_id": challenge_body["cell_contest_id"],
        "shortcode": challenge_body["shortcode"],
        "ciphertext": ct.to_dict(params),
    }
    if validity_proof is not None:
        body["validity_proof"] = validity_proof
    return body


def find_committed_cell(publication_body: dict, cell_contest_id: str,
                        shortcode: str) -> str | None:
    """Resolve a shortcode to its published commitment hex, if any."""
    contest = publication_body["contests"].get(cell_contest_id)
    if contest is None:
        return None
    for entry in contest["candidate_cells"]:
        if entry["code"] == shortcode:
            return entry["commitment"]
    return None


def adjudicate(params: GroupParams, pk: GroupElement, challenge_body: dict,
               resp_body: dict, publication_body: dict) -> str:
    """Pure verdict from posted records alone.

    ResponseInvalid: missing/failed validity proof, or the response does not
    address the challenged cell. VoterProven: the revealed ciphertext starts
    with the voter's partial, proving they saw under that scratch layer.
    AuthorityVindicated: everything checks and the prefix differs.
    """
    for key in ("ballot_id", "serial", "cell_contest_id", "shortcode"):
        if resp_body.get(key) != challenge_body.get(key):
            return VERDICT_RESPONSE_INVALID
    commitment_hex = find_committed_cell(publication_body,
                                         challenge_body["cell_contest_id"],
                                         challenge_body["shortcode"])
    if commitment_hex is None:
        return VERDICT_RESPONSE_INVALID
    proof = resp_body.get("validity_proof")
    if proof is None:
        return VERDICT_RESPONSE_INVALID
    try:
        ct = ElgCiphertext.from_dict(params, resp_body["ciphertext"])
        commitment = params.decode_hex(commitment_hex)
    except (KeyError, ValueError):
        return VERDICT_RESPONSE_INVALID
    if not verify_validity_proof(params, pk, commitment, ct, proof):
        return VERDICT_RESPONSE_INVALID
    revealed_prefix = ct.encode(params)[:PARTIAL_BYTES].hex()
    if revealed_prefix == challenge_body["partial"]:
        return VERDICT_VOTER_PROVEN
    return VERDICT_AUTHORITY_VINDICATED


# ---------------------------------------------------------------------------
# disclaimers


def post_disclaimer(board: BoardLog, ballot_id: str, cell_contest_id: str):
    """Flag a ballot whose scratch evidence may contradict its marks.

    The verifier reports the disclaimer count as the bound on cheated
    ballots. Refused once results are on the board.
    """
    if board.first_of_kind(board_mod.KIND_TALLY_RECORD) is not None:
        raise ProtocolError("cannot disclaim after results are posted")
    return board.append(board_mod.KIND_DISCLAIMER, {
        "ballot_id": ballot_id,
        "cell_contest_id": cell_contest_id,
    })

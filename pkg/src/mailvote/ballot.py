"""Election manifests, ballot key schedule, encrypted ballots, printed forms.

An encrypted ballot is fully determined by (manifest, R, per-cell true
randomness): R seeds the ElGamal randomness stream, each cell's commitment
randomness comes from 32 bytes of true randomness, weights follow the
base-(k+1) positional encoding, and all codes are hashes of commitments.
That determinism is what both audit paths rest on: a spoil reveal or a
scratch-off challenge hands over (R, true randomness) and anyone can rebuild
the ballot bit for bit.

Cell order within a ballot is normative: for each cell contest (ranked
contests expand to one k=1 sub-contest per rank position), the candidate
cells in candidate order, then the k abstention cells. Publication order is
different and also normative: candidate cells sorted by shortcode, so the
public record never reveals which code sits beside which candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import cce
from .algebra import GroupElement, GroupParams
from .encoding import int_be, tagged_hash
from .errors import ProtocolError, TamperedPayload

R_BYTES = 32
TRNG_BYTES = 32

FORM_REMOTEVOTE = "remotevote_pair"
FORM_SAFEVOTE = "safevote"
FORM_HYBRID = "hybrid"

BATCH_INITIAL = "initial"
BATCH_REPLACEMENT = "replacement"
BATCH_DUPLICATE = "duplicate"


class BallotGenError(ProtocolError):
    pass


# ---------------------------------------------------------------------------
# manifest


@dataclass(frozen=True)
class Contest:
    contest_id: str
    candidates: tuple[str, ...]
    k: int = 1
    method: str = "plurality"  # or "irv"
    ranks: int = 0  # irv: number of rank positions

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("selection limit k must be >= 1")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError(f"duplicate candidate in contest {self.contest_id!r}")
        if self.method not in ("plurality", "irv"):
            raise ValueError(f"unknown tally method {self.method!r}")
        if self.method == "irv" and not 1 <= self.ranks <= len(self.candidates):
            raise ValueError("irv contests need 1 <= ranks <= candidate count")


@dataclass(frozen=True)
class CellContest:
    """Unit of cell layout; an irv rank position is its own k=1 cell contest."""

    cell_contest_id: str
    base_id: str
    candidates: tuple[str, ...]
    k: int

    def weight(self, candidate_index: int) -> int:
        return (self.k + 1) ** candidate_index

    def cell_count(self) -> int:
        return len(self.candidates) + self.k


@dataclass
class ElectionManifest:
    election_id: str
    scheme: str  # remotevote | safevote | hybrid
    contests: list[Contest]
    group: GroupParams
    pk: GroupElement
    threshold: int
    trustee_count: int
    trustee_commits: dict[int, GroupElement]
    shortcode_bytes: int = 2
    ballot_keypairs: bool = False
    grace_window: int = 200
    dispute_window: int = 1000
    mix_rounds: int = 40

    def __post_init__(self):
        if self.scheme not in ("remotevote", "safevote", "hybrid"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.shortcode_bytes < 1:
            raise ValueError("shortcodes need at least one byte")
        ids = [c.contest_id for c in self.contests]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate contest id")

    def cell_contests(self) -> list[CellContest]:
        out = []
        for c in self.contests:
            if c.method == "irv":
                for r in range(c.ranks):
                    out.append(CellContest(f"{c.contest_id}#r{r}", c.contest_id,
                                           c.candidates, 1))
            else:
                out.append(CellContest(c.contest_id, c.contest_id, c.candidates, c.k))
        return out

    def cell_contest(self, cell_contest_id: str) -> CellContest:
        for cc in self.cell_contests():
            if cc.cell_contest_id == cell_contest_id:
                return cc
        raise KeyError(cell_contest_id)

    def contest(self, contest_id: str) -> Contest:
        for c in self.contests:
            if c.contest_id == contest_id:
                return c
        raise KeyError(contest_id)

    def cells_per_ballot(self) -> int:
        return sum(cc.cell_count() for cc in self.cell_contests())

    def to_dict(self) -> dict:
        return {
            "election_id": self.election_id,
            "scheme": self.scheme,
            "contests": [
                {
                    "contest_id": c.contest_id,
                    "candidates": list(c.candidates),
                    "k": c.k,
                    "method": c.method,
                    "ranks": c.ranks,
                }
                for c in self.contests
            ],
            "group": self.group.to_dict(),
            "pk": self.group.encode_hex(self.pk),
            "threshold": self.threshold,
            "trustee_count": self.trustee_count,
            "trustee_commits": {
                str(i): self.group.encode_hex(e) for i, e in self.trustee_commits.items()
            },
            "shortcode_bytes": self.shortcode_bytes,
            "ballot_keypairs": self.ballot_keypairs,
            "grace_window": self.grace_window,
            "dispute_window": self.dispute_window,
            "mix_rounds": self.mix_rounds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ElectionManifest":
        group = GroupParams.from_dict(d["group"])
        return cls(
            election_id=d["election_id"],
            scheme=d["scheme"],
            contests=[
                Contest(c["contest_id"], tuple(c["candidates"]), c["k"],
                        c["method"], c["ranks"])
                for c in d["contests"]
            ],
            group=group,
            pk=group.decode_hex(d["pk"]),
            threshold=d["threshold"],
            trustee_count=d["trustee_count"],
            trustee_commits={int(i): group.decode_hex(e)
                             for i, e in d["trustee_commits"].items()},
            shortcode_bytes=d["shortcode_bytes"],
            ballot_keypairs=d["ballot_keypairs"],
            grace_window=d["grace_window"],
            dispute_window=d["dispute_window"],
            mix_rounds=d["mix_rounds"],
        )


# ---------------------------------------------------------------------------
# key schedule and randomness stream


def key_schedule(R: bytes) -> tuple[bytes, bytes]:
    """Derive the two R-keyed subkeys: (ElGamal stream key, QR payload key)."""
    if len(R) != R_BYTES:
        raise ValueError(f"R must be {R_BYTES} bytes, got {len(R)}")
    return tagged_hash("rv/elg", R), tagged_hash("rv/qr", R)


def stream_scalar(params: GroupParams, stream_key: bytes, index: int) -> int:
    if index < 0:
        raise ValueError("stream index must be >= 0")
    return params.hash_scalar("rv/r", stream_key, int_be(index))


class RandomnessStream:
    """R-seeded ElGamal randomness, with zero outputs skipped and recorded.

    A zero scalar would make a degenerate ciphertext (identity first
    component), so those indices are skipped; the skip list travels with the
    ballot secrets so replay stays index-exact.
    """

    def __init__(self, params: GroupParams, stream_key: bytes):
        self.params = params
        self.stream_key = stream_key
        self.index = 0
        self.skipped: list[int] = []

    def next(self) -> int:
        while True:
            r = stream_scalar(self.params, self.stream_key, self.index)
            self.index += 1
            if r != 0:
                return r
            self.skipped.append(self.index - 1)


# ---------------------------------------------------------------------------
# codes


def derive_shortcode(params: GroupParams, commitment: GroupElement,
                     cell_contest_id: str, candidate_index: int,
                     n_bytes: int = 2) -> str:
    digest = tagged_hash("rv/sc", cell_contest_id.encode(), int_be(candidate_index),
                         params.encode(commitment))
    return digest[:n_bytes].hex()


def canonical_commitment_order(contest_cells: "ContestCells",
                               params: GroupParams) -> list[GroupElement]:
    """Publication order: candidate cells sorted by shortcode, then abstentions
    sorted by encoding. Longcodes hash commitments in this order."""
    cands = sorted(
        zip(contest_cells.shortcodes, contest_cells.cells[:contest_cells.n_candidates]),
        key=lambda p: p[0],
    )
    absts = sorted(contest_cells.cells[contest_cells.n_candidates:],
                   key=lambda c: params.encode(c.commitment))
    return [c.commitment for _, c in cands] + [c.commitment for c in absts]


def derive_longcode(ballot: "EncryptedBallot", params: GroupParams) -> bytes:
    parts = []
    for contest_cells in ballot.contests:
        parts.extend(params.encode(c) for c in canonical_commitment_order(contest_cells, params))
    return tagged_hash("rv/lc", *parts)


def derive_pair_id(longcode_a: bytes, longcode_b: bytes) -> str:
    """Combined RemoteVote ballot id; A/B label order is fixed at pairing time."""
    return tagged_hash("rv/id", longcode_a, longcode_b).hex()


# ---------------------------------------------------------------------------
# encrypted ballots


@dataclass
class ContestCells:
    cell_contest_id: str
    n_candidates: int
    cells: list[cce.CCECell]  # candidate cells then k abstention cells
    shortcodes: list[str]  # one per candidate cell


@dataclass
class EncryptedBallot:
    serial: str
    R: bytes
    contests: list[ContestCells]
    longcode: bytes
    true_randomness: list[bytes]  # 32 bytes per cell, ballot cell order
    skip_list: list[int]

    @property
    def ballot_id(self) -> str:
        """SAFE Vote prints the longcode as the ballot id."""
        return self.longcode.hex()

    def contest(self, cell_contest_id: str) -> ContestCells:
        for cc in self.contests:
            if cc.cell_contest_id == cell_contest_id:
                return cc
        raise KeyError(cell_contest_id)


def build_cells(manifest: ElectionManifest, R: bytes,
                true_randomness: list[bytes]) -> EncryptedBallot:
    """Deterministically rebuild a ballot from its secrets (serial unset).

    This is the single regeneration path used by generation, spoil-reveal
    checking, and the scratch-off challenge, so all three agree bit for bit.
    """
    params = manifest.group
    elg_key, _ = key_schedule(R)
    stream = RandomnessStream(params, elg_key)
    expected = manifest.cells_per_ballot()
    if len(true_randomness) != expected:
        raise BallotGenError(
            f"need {expected} true-randomness strings, got {len(true_randomness)}")
    for t in true_randomness:
        if len(t) != TRNG_BYTES:
            raise BallotGenError("each cell needs exactly 32 bytes of true randomness")
    contests = []
    cursor = 0
    for cc in manifest.cell_contests():
        cells = []
        codes = []
        for j in range(len(cc.candidates)):
            s = int.from_bytes(true_randomness[cursor], "big") % params.q
            cell = cce.commit_encrypt(params, manifest.pk, cc.weight(j), s, stream.next())
            cells.append(cell)
            codes.append(derive_shortcode(params, cell.commitment, cc.cell_contest_id,
                                          j, manifest.shortcode_bytes))
            cursor += 1
        for _ in range(cc.k):
            s = int.from_bytes(true_randomness[cursor], "big") % params.q
            cells.append(cce.commit_encrypt(params, manifest.pk, 0, s, stream.next()))
            cursor += 1
        contests.append(ContestCells(cc.cell_contest_id, len(cc.candidates), cells, codes))
    ballot = EncryptedBallot("", R, contests, b"", true_randomness, stream.skipped)
    ballot.longcode = derive_longcode(ballot, params)
    return ballot


def generate_encrypted_ballot(manifest: ElectionManifest, R: bytes, trng,
                              serial: str, max_retries: int = 32) -> EncryptedBallot:
    """Generate a fresh encrypted ballot.

    trng() must return 32 fresh true-random bytes per call; one call per
    cell. If any contest ends up with two candidate cells sharing a
    shortcode, the whole ballot is regenerated under a fresh R (the codes are
    pure functions of the cells, so only new randomness can clear a clash).
    """
    n_cells = manifest.cells_per_ballot()
    for attempt in range(max_retries):
        ballot = build_cells(manifest, R, [trng() for _ in range(n_cells)])
        if all(len(set(cc.shortcodes)) == len(cc.shortcodes) for cc in ballot.contests):
            ballot.serial = serial
            return ballot
        R = trng()
    raise BallotGenError(f"shortcode collisions persisted through {max_retries} regenerations")


# ---------------------------------------------------------------------------
# QR payload: true randomness encrypted under the R-derived key


def qr_encrypt(true_randomness: list[bytes], qr_key: bytes) -> bytes:
    plain = b"".join(true_randomness)
    out = bytearray()
    for i in range(0, len(plain), 32):
        block = tagged_hash("rv/qks", qr_key, int_be(i // 32))
        chunk = plain[i:i + 32]
        out.extend(x ^ y for x, y in zip(chunk, block))
    tag = tagged_hash("rv/qtag", qr_key, bytes(out))
    return bytes(out) + tag


def qr_decrypt(payload: bytes, qr_key: bytes) -> list[bytes]:
    """Invert qr_encrypt after checking the integrity tag.

    A corrupted payload raises TamperedPayload; that is distinct from a clean
    decrypt whose contents fail the challenge comparison, so payload damage
    never masquerades as fraud evidence (or vice versa).
    """
    if len(payload) < 32 or (len(payload) - 32) % TRNG_BYTES != 0:
        raise TamperedPayload("QR payload has an impossible length")
    body, tag = payload[:-32], payload[-32:]
    if tagged_hash("rv/qtag", qr_key, body) != tag:
        raise TamperedPayload("QR payload integrity tag mismatch")
    plain = bytearray()
    for i in range(0, len(body), 32):
        block = tagged_hash("rv/qks", qr_key, int_be(i // 32))
        plain.extend(x ^ y for x, y in zip(body[i:i + 32], block))
    return [bytes(plain[i:i + TRNG_BYTES]) for i in range(0, len(plain), TRNG_BYTES)]


# ---------------------------------------------------------------------------
# printed forms


@dataclass(frozen=True)
class PrintedRow:
    cell_contest_id: str
    candidate: str
    codes: tuple[str, ...]  # one column (SAFE Vote) or two (pair forms)
    partials: tuple[str, ...]  # hex ciphertext prefixes under per-candidate scratch


@dataclass(frozen=True)
class ScratchPanel:
    label: str  # column label, or "-" on single-column forms
    r_hex: str  # the concealed R
    longcode_hex: str  # that column's longcode, printed beside the panel
    qr_payload_hex: str


@dataclass
class PrintedBallot:
    form: str
    ballot_id: str
    rows: list[PrintedRow]
    panels: list[ScratchPanel] = field(default_factory=list)
    signing_key_hex: str | None = None

    def row(self, cell_contest_id: str, candidate: str) -> PrintedRow:
        for r in self.rows:
            if r.cell_contest_id == cell_contest_id and r.candidate == candidate:
                return r
        raise KeyError((cell_contest_id, candidate))

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "ballot_id": self.ballot_id,
            "rows": [
                {
                    "cell_contest_id": r.cell_contest_id,
                    "candidate": r.candidate,
                    "codes": list(r.codes),
                    "partials": list(r.partials),
                }
                for r in self.rows
            ],
            "panels": [
                {
                    "label": p.label,
                    "r": p.r_hex,
                    "longcode": p.longcode_hex,
                    "qr_payload": p.qr_payload_hex,
                }
                for p in self.panels
            ],
            "signing_key": self.signing_key_hex,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PrintedBallot":
        return cls(
            form=d["form"],
            ballot_id=d["ballot_id"],
            rows=[
                PrintedRow(r["cell_contest_id"], r["candidate"], tuple(r["codes"]),
                           tuple(r["partials"]))
                for r in d["rows"]
            ],
            panels=[
                ScratchPanel(p["label"], p["r"], p["longcode"], p["qr_payload"])
                for p in d["panels"]
            ],
            signing_key_hex=d.get("signing_key"),
        )


def cell_partial(params: GroupParams, cell: cce.CCECell, n_bytes: int = 16) -> str:
    """Scratch-concealed evidence: a prefix of the cell's private ciphertext."""
    return cell.ciphertext.encode(params)[:n_bytes].hex()


def _rows(manifest: ElectionManifest, ballots: list[EncryptedBallot]) -> list[PrintedRow]:
    params = manifest.group
    rows = []
    for cc in manifest.cell_contests():
        per = [b.contest(cc.cell_contest_id) for b in ballots]
        for j, cand in enumerate(cc.candidates):
            rows.append(PrintedRow(
                cc.cell_contest_id, cand,
                tuple(p.shortcodes[j] for p in per),
                tuple(cell_partial(params, p.cells[j]) for p in per),
            ))
    return rows


def _panel(manifest: ElectionManifest, ballot: EncryptedBallot, label: str) -> ScratchPanel:
    _, qr_key = key_schedule(ballot.R)
    return ScratchPanel(label, ballot.R.hex(), ballot.longcode.hex(),
                        qr_encrypt(ballot.true_randomness, qr_key).hex())


def print_safevote(manifest: ElectionManifest, ballot: EncryptedBallot,
                   signing_key: int | None = None) -> PrintedBallot:
    return PrintedBallot(
        form=FORM_SAFEVOTE,
        ballot_id=ballot.ballot_id,
        rows=_rows(manifest, [ballot]),
        panels=[_panel(manifest, ballot, "-")],
        signing_key_hex=format(signing_key, "x") if signing_key is not None else None,
    )


def print_remotevote_pair(manifest: ElectionManifest, ballot_a: EncryptedBallot,
                          ballot_b: EncryptedBallot, pair_id: str,
                          signing_key: int | None = None) -> PrintedBallot:
    return PrintedBallot(
        form=FORM_REMOTEVOTE,
        ballot_id=pair_id,
        rows=_rows(manifest, [ballot_a, ballot_b]),
        signing_key_hex=format(signing_key, "x") if signing_key is not None else None,
    )


def print_hybrid(manifest: ElectionManifest, ballot_a: EncryptedBallot,
                 ballot_b: EncryptedBallot, pair_id: str,
                 signing_key: int | None = None) -> PrintedBallot:
    """Hybrid form: two code columns, and per-column scratch panels carrying
    that column's R, longcode, and QR payload for at-will offline challenges."""
    return PrintedBallot(
        form=FORM_HYBRID,
        ballot_id=pair_id,
        rows=_rows(manifest, [ballot_a, ballot_b]),
        panels=[_panel(manifest, ballot_a, "A"), _panel(manifest, ballot_b, "B")],
        signing_key_hex=format(signing_key, "x") if signing_key is not None else None,
    )


# ---------------------------------------------------------------------------
# publication bodies (the public face of a ballot on the bulletin board)


def publication_body(manifest: ElectionManifest, ballot: EncryptedBallot,
                     batch: str, verification_key: GroupElement | None = None) -> dict:
    """BallotPublication body: commitments, shortcodes, and id, advance-posted.

    Candidate cells appear as (shortcode, commitment) pairs sorted by
    shortcode; candidate order is deliberately absent so receipts stay
    uninterpretable to observers.
    """
    params = manifest.group
    contests = {}
    for contest_cells in ballot.contests:
        n = contest_cells.n_candidates
        cands = sorted(
            ({"code": code, "commitment": params.encode_hex(cell.commitment)}
             for code, cell in zip(contest_cells.shortcodes, contest_cells.cells[:n])),
            key=lambda e: e["code"],
        )
        absts = sorted(params.encode_hex(c.commitment) for c in contest_cells.cells[n:])
        contests[contest_cells.cell_contest_id] = {
            "candidate_cells": cands,
            "abstention_commitments": absts,
        }
    body = {
        "serial": ballot.serial,
        "batch": batch,
        "longcode": ballot.longcode.hex(),
        "contests": contests,
    }
    if verification_key is not None:
        body["verification_key"] = params.encode_hex(verification_key)
    return body

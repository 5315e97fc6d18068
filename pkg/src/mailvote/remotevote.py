"""RemoteVote flow: ballot pairing, beacon-driven spoiling, partial images.

Every physical RemoteVote ballot carries two encrypted ballots (columns A
and B). After all pairs are committed on the board, a public randomness
beacon deterministically spoils one column per pair; the spoiled column's
secrets are published so anyone can recheck its cells, and a voter can
rebuild the expected code column ("partial image") for their own ballot. A
forged column has a 50% chance of being the spoiled one, so per-ballot
confidence is 1 - 2^-f across f forged-and-verified ballots.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import board as board_mod
from .ballot import ElectionManifest, EncryptedBallot, build_cells, derive_pair_id
from .board import BoardLog
from .encoding import tagged_hash
from .errors import ForgeryEvidence, ProtocolError


class PairingError(ProtocolError):
    pass


class SpoilRefused(ProtocolError):
    pass


@dataclass(frozen=True)
class BallotPair:
    ballot_id: str
    serial_a: str
    serial_b: str

    def serial(self, column: str) -> str:
        if column == "A":
            return self.serial_a
        if column == "B":
            return self.serial_b
        raise ValueError(f"no column {column!r}")

    def other(self, column: str) -> str:
        return "B" if column == "A" else "A"


def codes_collide(a: EncryptedBallot, b: EncryptedBallot) -> bool:
    """True if any contest's A+B shortcode union has a duplicate."""
    for ca, cb in zip(a.contests, b.contests):
        union = ca.shortcodes + cb.shortcodes
        if len(set(union)) != len(union):
            return True
    return False


def pair_ballots(ballots: list[EncryptedBallot]) -> list[tuple[EncryptedBallot, EncryptedBallot]]:
    """Greedy collision-free pairing; first ballot of each pair is column A."""
    if len(ballots) % 2 != 0:
        raise PairingError(f"cannot pair an odd count ({len(ballots)})")
    remaining = list(ballots)
    pairs = []
    while remaining:
        a = remaining.pop(0)
        partner = None
        for i, b in enumerate(remaining):
            if not codes_collide(a, b):
                partner = remaining.pop(i)
                break
        if partner is None:
            raise PairingError(f"no collision-free partner for ballot {a.serial}")
        pairs.append((a, partner))
    return pairs


def make_pair(a: EncryptedBallot, b: EncryptedBallot) -> BallotPair:
    return BallotPair(derive_pair_id(a.longcode, b.longcode), a.serial, b.serial)


def post_pair(board: BoardLog, pair: BallotPair):
    return board.append(board_mod.KIND_PAIR_RECORD, {
        "ballot_id": pair.ballot_id,
        "a": pair.serial_a,
        "b": pair.serial_b,
    })


def select_spoil_column(beacon: bytes, ballot_id: str) -> str:
    """Publicly recomputable column choice: parity of the beacon/id hash."""
    digest = tagged_hash("rv/spoil", beacon, ballot_id.encode())
    return "B" if digest[-1] & 1 else "A"


def spoil_body(pair: BallotPair, column: str, ballot: EncryptedBallot) -> dict:
    return {
        "mode": "column",
        "ballot_id": pair.ballot_id,
        "column": column,
        "serial": ballot.serial,
        "r": ballot.R.hex(),
        "true_randomness": [t.hex() for t in ballot.true_randomness],
        "skip_list": list(ballot.skip_list),
    }


def publish_spoil(board: BoardLog, pair: BallotPair, column: str,
                  ballot: EncryptedBallot, beacon: bytes):
    """Post the spoiled column's secrets. Refuses any column the beacon did
    not select; revealing the live column would destroy ballot secrecy."""
    expected = select_spoil_column(beacon, pair.ballot_id)
    if column != expected:
        raise SpoilRefused(
            f"beacon selects column {expected} for {pair.ballot_id}, not {column}")
    if ballot.serial != pair.serial(column):
        raise SpoilRefused("secrets do not belong to the spoiled column")
    return board.append(board_mod.KIND_SPOIL_REVEAL, spoil_body(pair, column, ballot))


def grace_spoil_body(ballot_id: str, serial: str) -> dict:
    """Grace-period exclusion of a cast serial (duplicated or disclaimed ballot)."""
    return {"mode": "grace", "ballot_id": ballot_id, "serial": serial}


@dataclass
class PartialImage:
    ballot_id: str
    column: str
    serial: str
    codes: dict[str, dict[str, str]]  # cell_contest -> candidate -> shortcode


def _find_publication(board: BoardLog, serial: str):
    for p in board.of_kind(board_mod.KIND_BALLOT_PUBLICATION):
        if p.body["serial"] == serial:
            return p
    return None


def check_reveal(manifest: ElectionManifest, reveal_body: dict,
                 publication_body: dict) -> EncryptedBallot:
    """Regenerate a spoiled column from its revealed secrets and compare its
    public face against the advance publication.

    Raises ForgeryEvidence listing every contest whose regenerated
    commitments, shortcodes, or longcode disagree with what was committed.
    """
    params = manifest.group
    regen = build_cells(manifest, bytes.fromhex(reveal_body["r"]),
                        [bytes.fromhex(t) for t in reveal_body["true_randomness"]])
    mismatches = []
    if regen.longcode.hex() != publication_body["longcode"]:
        mismatches.append(("longcode", publication_body["longcode"], regen.longcode.hex()))
    for contest_cells in regen.contests:
        pub = publication_body["contests"].get(contest_cells.cell_contest_id)
        if pub is None:
            mismatches.append(("missing_contest", contest_cells.cell_contest_id, None))
            continue
        n = contest_cells.n_candidates
        expected = sorted(
            (code, params.encode_hex(cell.commitment))
            for code, cell in zip(contest_cells.shortcodes, contest_cells.cells[:n])
        )
        got = sorted((e["code"], e["commitment"]) for e in pub["candidate_cells"])
        if expected != got:
            mismatches.append(("candidate_cells", contest_cells.cell_contest_id, None))
        absts = sorted(params.encode_hex(c.commitment) for c in contest_cells.cells[n:])
        if absts != sorted(pub["abstention_commitments"]):
            mismatches.append(("abstentions", contest_cells.cell_contest_id, None))
    if mismatches:
        raise ForgeryEvidence("revealed secrets do not reproduce the published ballot",
                              mismatches)
    return regen


def reconstruct_partial_image(manifest: ElectionManifest, ballot_id: str,
                              board: BoardLog) -> PartialImage:
    """Rebuild the expected spoiled-column codes for one ballot from public data.

    The voter holds this image next to the matching printed column; a forged
    encryption that landed on the spoiled column shows up as a row mismatch.
    """
    reveal = None
    for p in board.of_kind(board_mod.KIND_SPOIL_REVEAL):
        if p.body.get("mode") == "column" and p.body["ballot_id"] == ballot_id:
            reveal = p
            break
    if reveal is None:
        raise ProtocolError(f"no spoil reveal posted for ballot {ballot_id}")
    publication = _find_publication(board, reveal.body["serial"])
    if publication is None:
        raise ForgeryEvidence(f"spoiled serial {reveal.body['serial']} was never published")
    regen = check_reveal(manifest, reveal.body, publication.body)
    codes: dict[str, dict[str, str]] = {}
    for cc in manifest.cell_contests():
        per = regen.contest(cc.cell_contest_id)
        codes[cc.cell_contest_id] = {
            cand: per.shortcodes[j] for j, cand in enumerate(cc.candidates)
        }
    return PartialImage(ballot_id, reveal.body["column"], reveal.body["serial"], codes)


def detection_confidence(forged_verified: int) -> float:
    """Probability at least one of f forged-and-verified ballots is exposed."""
    if forged_verified < 0:
        raise ValueError("count must be >= 0")
    return 1.0 - 0.5 ** forged_verified


def pairing_resistance_exponent(trustworthy_bits: int) -> int:
    """log2 of the odds a pairing resists detection: one in 2^(2^n).

    Returned as the exponent 2^n, since the full value overflows quickly.
    """
    if trustworthy_bits < 0:
        raise ValueError("bit count must be >= 0")
    return 2 ** trustworthy_bits

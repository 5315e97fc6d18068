"""SAFE Vote flow: scratch-off challenge, replacements, scratched returns.

The challenge is fully offline: the scratch layer conceals R, the QR payload
decrypts under an R-derived key to the per-cell true randomness, and from
those plus the public manifest anyone can regenerate every commitment,
shortcode, and the longcode ballot id, then compare against the printed
face. No bulletin board, authority cooperation, or decryption key is
involved, and a single forged cell is caught deterministically.

A ballot returned with its scratch removed gets no shortcode receipt
(receipt plus R would reveal the vote); instead a ScratchNotice is posted,
the marks are transcribed onto a fresh encrypted ballot by the duplication
team, and that duplicate is cast normally. The original-to-duplicate link
stays in the authority's private records; a grace window lets the voter
spoil the duplicate and revote if the scratched return was not their doing.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ballot import (
    FORM_HYBRID,
    FORM_SAFEVOTE,
    ElectionManifest,
    PrintedBallot,
    build_cells,
    key_schedule,
    qr_decrypt,
)
from .errors import ProtocolError


class ReturnError(ProtocolError):
    pass


@dataclass(frozen=True)
class ScratchState:
    """Physical state of a scratch panel at return time."""

    intact: bool
    revealed_r: bytes | None = None

    def __post_init__(self):
        if self.intact != (self.revealed_r is None):
            raise ValueError("revealed R present iff the panel was scratched")


@dataclass(frozen=True)
class RowComparison:
    cell_contest_id: str
    candidate: str
    printed: str
    expected: str

    @property
    def ok(self) -> bool:
        return self.printed == self.expected


@dataclass
class ChallengeReport:
    ballot_id: str
    column: str
    rows: list[RowComparison]
    id_printed: str
    id_expected: str

    @property
    def id_ok(self) -> bool:
        return self.id_printed == self.id_expected

    @property
    def consistent(self) -> bool:
        return self.id_ok and all(r.ok for r in self.rows)

    @property
    def verdict(self) -> str:
        return "Consistent" if self.consistent else "Discrepant"

    def discrepant_rows(self) -> list[RowComparison]:
        return [r for r in self.rows if not r.ok]

    def to_dict(self) -> dict:
        return {
            "ballot_id": self.ballot_id,
            "column": self.column,
            "verdict": self.verdict,
            "id_ok": self.id_ok,
            "id_printed": self.id_printed,
            "id_expected": self.id_expected,
            "rows": [
                {
                    "cell_contest_id": r.cell_contest_id,
                    "candidate": r.candidate,
                    "printed": r.printed,
                    "expected": r.expected,
                    "ok": r.ok,
                }
                for r in self.rows
            ],
        }


def challenge(manifest: ElectionManifest, printed: PrintedBallot,
              revealed_r: bytes, column: str | None = None) -> ChallengeReport:
    """Offline scratch-off audit of one printed column.

    Regenerates the column's every shortcode and its longcode from the
    revealed R plus the QR payload and compares them against the printed
    values. Raises TamperedPayload if the QR fails its integrity tag (a
    damaged payload, not fraud evidence) and ValueError on a wrong-length R.
    """
    if printed.form == FORM_SAFEVOTE:
        panel, col_index = printed.panels[0], 0
        column = panel.label
    elif printed.form == FORM_HYBRID:
        if column not in ("A", "B"):
            raise ValueError("hybrid challenges must name column A or B")
        panel = next(p for p in printed.panels if p.label == column)
        col_index = 0 if column == "A" else 1
    else:
        raise ValueError(f"form {printed.form!r} has no scratch challenge")

    _, qr_key = key_schedule(revealed_r)
    randomness = qr_decrypt(bytes.fromhex(panel.qr_payload_hex), qr_key)
    regen = build_cells(manifest, revealed_r, randomness)

    rows = []
    for cc in manifest.cell_contests():
        per = regen.contest(cc.cell_contest_id)
        for j, cand in enumerate(cc.candidates):
            rows.append(RowComparison(
                cc.cell_contest_id, cand,
                printed.row(cc.cell_contest_id, cand).codes[col_index],
                per.shortcodes[j],
            ))

    # SAFE Vote prints the longcode as the ballot id; the hybrid form prints
    # each column's longcode beside its panel (the combined id needs both).
    id_printed = printed.ballot_id if printed.form == FORM_SAFEVOTE else panel.longcode_hex
    return ChallengeReport(printed.ballot_id, column, rows, id_printed,
                           regen.longcode.hex())


def issue_replacement(authority, old_serial: str):
    """Fresh ballot after a challenge; the old serial is retired unused.

    Replacements repeat at will, but never after the old ballot was cast.
    """
    record = authority.record(old_serial)
    if record.cast:
        raise ReturnError("cannot replace a ballot that was already cast")
    record.challenged = True
    return authority.new_ballot(batch="replacement")


def process_return(authority, ballot_id: str, marks: dict,
                   scratch: ScratchState, cast_column: str | None = None) -> dict:
    """Apply the scratched-return rule to one returned ballot.

    Intact scratch: normal cast with a shortcode receipt. Removed scratch:
    ScratchNotice, no receipt for this ballot ever, marks transcribed onto a
    fresh duplicate which is cast normally; the duplicate link is recorded
    privately and the grace window opens at the notice's sequence number.
    """
    serial = authority.cast_serial_for(ballot_id, cast_column)
    if scratch.intact:
        post = authority.cast(ballot_id, serial, marks)
        return {"disposition": "cast", "serial": serial, "receipt_seq": post.seq}
    notice = authority.post_scratch_notice(ballot_id)
    duplicate = authority.new_ballot(batch="duplicate")
    authority.record(duplicate.serial).duplicate_of = serial
    authority.record(serial).scratched = True
    post = authority.cast(duplicate.ballot_id, duplicate.serial, marks)
    return {
        "disposition": "duplicated",
        "serial": serial,
        "duplicate_serial": duplicate.serial,
        "notice_seq": notice.seq,
        "receipt_seq": post.seq,
    }


def grace_spoil(authority, ballot_id: str) -> dict:
    """Spoil a duplicated (or disclaimed) ballot inside its grace window.

    Excludes the linked cast serial from the tally and permits one revote.
    Refused without a matching notice/disclaimer, outside the window, or a
    second time.
    """
    return authority.grace_spoil(ballot_id)

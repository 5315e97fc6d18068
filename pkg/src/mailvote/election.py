"""Election authority state and the end-to-end election lifecycle.

The Authority owns everything the public record does not: trustee secrets,
per-ballot R values and true randomness, the private original-to-duplicate
link table, and cast state. Ballot cells are never persisted; they are
regenerated on demand from (manifest, R, true randomness), which keeps the
secrets file in the shape observers expect a reveal to take and exercises
the determinism the audits depend on.

run_election drives a full simulated lifecycle (setup, generate, publish,
pair/beacon/spoil or deliver, vote, return, tally, verify) with optional
adversary behavior supplied by the simulator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import board as board_mod
from . import disputes, remotevote, safevote, tally
from .algebra import GroupParams, setup
from .ballot import (
    BATCH_DUPLICATE,
    BATCH_INITIAL,
    R_BYTES,
    Contest,
    ElectionManifest,
    EncryptedBallot,
    PrintedBallot,
    build_cells,
    generate_encrypted_ballot,
    print_hybrid,
    print_remotevote_pair,
    print_safevote,
    publication_body,
)
from .board import BoardLog
from .elgamal import DecryptionShare, ElgCiphertext, TrusteeShare, keygen
from .errors import ProtocolError
from .remotevote import BallotPair
from .tally import CastError, CastRecord


@dataclass
class BallotRecord:
    serial: str
    r: bytes
    true_randomness: list[bytes]
    skip_list: list[int]
    batch: str
    signing_secret: int | None = None
    published: bool = False
    cast: bool = False
    challenged: bool = False
    scratched: bool = False
    grace_spoiled: bool = False
    duplicate_of: str | None = None  # private link table entry
    pair_id: str | None = None
    column: str | None = None

    def to_dict(self) -> dict:
        return {
            "serial": self.serial,
            "r": self.r.hex(),
            "true_randomness": [t.hex() for t in self.true_randomness],
            "skip_list": self.skip_list,
            "batch": self.batch,
            "signing_secret": format(self.signing_secret, "x")
            if self.signing_secret is not None else None,
            "published": self.published,
            "cast": self.cast,
            "challenged": self.challenged,
            "scratched": self.scratched,
            "grace_spoiled": self.grace_spoiled,
            "duplicate_of": self.duplicate_of,
            "pair_id": self.pair_id,
            "column": self.column,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BallotRecord":
        return cls(
            serial=d["serial"],
            r=bytes.fromhex(d["r"]),
            true_randomness=[bytes.fromhex(t) for t in d["true_randomness"]],
            skip_list=list(d["skip_list"]),
            batch=d["batch"],
            signing_secret=int(d["signing_secret"], 16) if d["signing_secret"] else None,
            published=d["published"],
            cast=d["cast"],
            challenged=d["challenged"],
            scratched=d["scratched"],
            grace_spoiled=d["grace_spoiled"],
            duplicate_of=d["duplicate_of"],
            pair_id=d["pair_id"],
            column=d["column"],
        )


class Authority:
    """Single election authority: board writer plus all private state."""

    def __init__(self, manifest: ElectionManifest, trustees: list[TrusteeShare],
                 trng, board: BoardLog | None = None):
        self.manifest = manifest
        self.params = manifest.group
        self.trustees = trustees
        self.trng = trng
        self.board = board if board is not None else BoardLog()
        self.records: dict[str, BallotRecord] = {}
        self.cast_records: dict[str, CastRecord] = {}
        self.pairs: dict[str, BallotPair] = {}
        self.printed: dict[str, PrintedBallot] = {}
        self.beacon: bytes | None = None
        self.grace_revotes: set[str] = set()
        self._serial_counter = 0
        self._cells: dict[str, EncryptedBallot] = {}
        self._id_index: dict[str, str] = {}  # single-ballot longcode hex -> serial

    # -- ballot lifecycle --------------------------------------------------

    def record(self, serial: str) -> BallotRecord:
        rec = self.records.get(serial)
        if rec is None:
            raise ProtocolError(f"unknown ballot serial {serial!r}")
        return rec

    def ballot(self, serial: str) -> EncryptedBallot:
        """Regenerate (and cache) the full cells for a serial."""
        cached = self._cells.get(serial)
        if cached is not None:
            return cached
        rec = self.record(serial)
        b = build_cells(self.manifest, rec.r, rec.true_randomness)
        b.serial = serial
        self._cells[serial] = b
        return b

    def new_ballot(self, batch: str = BATCH_INITIAL, publish: bool = True) -> EncryptedBallot:
        self._serial_counter += 1
        serial = f"B{self._serial_counter:05d}"
        ballot = generate_encrypted_ballot(self.manifest, self.trng(), self.trng, serial)
        signing_secret = None
        if self.manifest.ballot_keypairs:
            signing_secret, _ = disputes.gen_ballot_keypair(
                self.params, _HashRng(self.params, self.trng()))
        self.records[serial] = BallotRecord(
            serial=serial,
            r=ballot.R,
            true_randomness=ballot.true_randomness,
            skip_list=ballot.skip_list,
            batch=batch,
            signing_secret=signing_secret,
        )
        self._cells[serial] = ballot
        self._id_index[ballot.ballot_id] = serial
        if publish:
            self.publish_ballot(serial)
        return ballot

    def publish_ballot(self, serial: str, mutate=None):
        """Advance-commit a ballot: post its commitments, shortcodes, and id.

        `mutate` lets adversary simulations corrupt the body on its way to
        the board; honest flows never pass it.
        """
        rec = self.record(serial)
        if rec.published:
            raise ProtocolError(f"{serial} already published")
        vk = None
        if rec.signing_secret is not None:
            vk = self.params.exp(self.params.g1, rec.signing_secret)
        body = publication_body(self.manifest, self.ballot(serial), rec.batch, vk)
        if mutate is not None:
            body = mutate(body)
        post = self.board.append(board_mod.KIND_BALLOT_PUBLICATION, body)
        rec.published = True
        return post

    # -- RemoteVote / hybrid stages ----------------------------------------

    def make_pairs(self, serials: list[str]) -> list[BallotPair]:
        ballots = [self.ballot(s) for s in serials]
        pairs = []
        for a, b in remotevote.pair_ballots(ballots):
            pair = remotevote.make_pair(a, b)
            remotevote.post_pair(self.board, pair)
            self.pairs[pair.ballot_id] = pair
            for serial, column in ((a.serial, "A"), (b.serial, "B")):
                self.record(serial).pair_id = pair.ballot_id
                self.record(serial).column = column
            pairs.append(pair)
        return pairs

    def post_beacon(self, beacon: bytes):
        if self.beacon is not None:
            raise ProtocolError("beacon already posted")
        self.beacon = beacon
        return self.board.append(board_mod.KIND_BEACON_RECORD, {"beacon": beacon.hex()})

    def spoil_pairs(self, skip: set[str] = frozenset()):
        """Reveal the beacon-selected column of every pair (minus `skip`,
        which exists only so adversary runs can model a withheld reveal)."""
        if self.beacon is None:
            raise ProtocolError("no beacon posted yet")
        for pair_id in sorted(self.pairs):
            if pair_id in skip:
                continue
            pair = self.pairs[pair_id]
            column = remotevote.select_spoil_column(self.beacon, pair_id)
            remotevote.publish_spoil(self.board, pair, column,
                                     self.ballot(pair.serial(column)), self.beacon)

    def unspoiled_serial(self, pair_id: str) -> str:
        pair = self.pairs[pair_id]
        column = remotevote.select_spoil_column(self.beacon, pair_id)
        return pair.serial(pair.other(column))

    # -- printing ------------------------------------------------------------

    def print_ballot(self, pair_id: str | None = None, serial: str | None = None) -> PrintedBallot:
        scheme = self.manifest.scheme
        if scheme == "remotevote" or (scheme == "hybrid" and pair_id is not None):
            pair = self.pairs[pair_id]
            a, b = self.ballot(pair.serial_a), self.ballot(pair.serial_b)
            key = self.record(pair.serial_a).signing_secret
            if scheme == "remotevote":
                printed = print_remotevote_pair(self.manifest, a, b, pair_id, key)
            else:
                printed = print_hybrid(self.manifest, a, b, pair_id, key)
        else:
            ballot = self.ballot(serial)
            printed = print_safevote(self.manifest, ballot,
                                     self.record(serial).signing_secret)
        self.printed[printed.ballot_id] = printed
        return printed

    def serials_for(self, ballot_id: str) -> list[str]:
        pair = self.pairs.get(ballot_id)
        if pair is not None:
            return [pair.serial_a, pair.serial_b]
        serial = self._id_index.get(ballot_id)
        if serial is not None:
            return [serial]
        for serial, rec in self.records.items():
            if self.ballot(serial).ballot_id == ballot_id:
                self._id_index[ballot_id] = serial
                return [serial]
        raise ProtocolError(f"unknown ballot id {ballot_id}")

    def cast_serial_for(self, ballot_id: str, cast_column: str | None = None) -> str:
        """Which encrypted ballot a return of this printed ballot casts."""
        pair = self.pairs.get(ballot_id)
        if pair is None:
            return self.serials_for(ballot_id)[0]
        if self.beacon is None:
            raise ProtocolError("cannot cast a paired ballot before the beacon")
        spoiled = remotevote.select_spoil_column(self.beacon, ballot_id)
        column = cast_column or pair.other(spoiled)
        if column == spoiled:
            raise CastError(f"column {column} of {ballot_id} was publicly spoiled")
        return pair.serial(column)

    # -- casting ----------------------------------------------------------

    def cast(self, ballot_id: str, serial: str, marks: dict,
             mutate_selections=None):
        """Record a cast and post its receipt.

        `mutate_selections` is the wrong_receipt adversary's hook: it swaps
        the recorded selections after intake validation, misrepresenting the
        voter on the board.
        """
        rec = self.record(serial)
        if not rec.published:
            raise CastError(f"{serial} was never published")
        if rec.cast:
            raise CastError(f"{serial} already cast")
        selections = tally.expand_marks(self.manifest, marks)
        if mutate_selections is not None:
            selections = mutate_selections(selections)
        rec.cast = True
        self.cast_records[serial] = CastRecord(serial, ballot_id, selections)
        body = tally.receipt_body(self.manifest, self.ballot(serial), ballot_id, selections)
        return self.board.append(board_mod.KIND_CAST_RECEIPT, body)

    def post_scratch_notice(self, ballot_id: str):
        return self.board.append(board_mod.KIND_SCRATCH_NOTICE, {"ballot_id": ballot_id})

    def grace_spoil(self, ballot_id: str):
        """Exclude a duplicated or disclaimed ballot's cast serial, once,
        inside the grace window opened by its notice/disclaimer."""
        trigger = None
        for post in self.board:
            if post.kind in (board_mod.KIND_SCRATCH_NOTICE, board_mod.KIND_DISCLAIMER) \
                    and post.body["ballot_id"] == ballot_id:
                trigger = post
                break
        if trigger is None:
            raise ProtocolError(f"no scratch notice or disclaimer for {ballot_id}")
        if self.board.next_seq > trigger.seq + self.manifest.grace_window:
            raise ProtocolError("grace window has closed")
        if ballot_id in self.grace_revotes:
            raise ProtocolError("this ballot already used its grace revote")
        serial = self._grace_target(ballot_id, trigger.kind)
        rec = self.record(serial)
        if rec.grace_spoiled:
            raise ProtocolError(f"{serial} already grace-spoiled")
        rec.grace_spoiled = True
        self.grace_revotes.add(ballot_id)
        return self.board.append(board_mod.KIND_SPOIL_REVEAL,
                                 remotevote.grace_spoil_body(ballot_id, serial))

    def _grace_target(self, ballot_id: str, trigger_kind: str) -> str:
        if trigger_kind == board_mod.KIND_SCRATCH_NOTICE:
            original = self.cast_serial_for(ballot_id)
            for serial, rec in self.records.items():
                if rec.duplicate_of == original and rec.cast and not rec.grace_spoiled:
                    return serial
            raise ProtocolError(f"no cast duplicate linked to {ballot_id}")
        for serial, rec in self.records.items():
            if rec.cast and not rec.grace_spoiled and \
                    self.cast_records[serial].ballot_id == ballot_id:
                return serial
        raise ProtocolError(f"no cast serial for disclaimed ballot {ballot_id}")

    def close_voting(self, voter_ids: list[str]):
        return self.board.append(board_mod.KIND_VOTER_LIST_RECORD, {
            "voters": sorted(voter_ids),
            "count": len(voter_ids),
        })

    # -- disputes ------------------------------------------------------------

    def respond_to_challenge(self, challenge_body: dict, omit_proof: bool = False):
        """Open the disputed cell with its validity proof and post the response."""
        serial = challenge_body["serial"]
        ballot = self.ballot(serial)
        contest_cells = ballot.contest(challenge_body["cell_contest_id"])
        cc = self.manifest.cell_contest(challenge_body["cell_contest_id"])
        try:
            j = contest_cells.shortcodes.index(challenge_body["shortcode"])
        except ValueError:
            raise ProtocolError("challenge names a shortcode this ballot never had")
        cell = contest_cells.cells[j]
        proof = None
        if not omit_proof:
            proof = disputes.make_validity_proof(
                self.params, self.manifest.pk, cell.commitment, cell.ciphertext,
                [0, cc.weight(j)], cell.opening.s, cell.opening.r, cell.opening.m)
        body = disputes.response_body(self.params, challenge_body, cell.ciphertext, proof)
        return self.board.append(board_mod.KIND_RESPONSE_RECORD, body)

    # -- tally --------------------------------------------------------------

    def counted_casts(self) -> list[tuple[EncryptedBallot, CastRecord]]:
        return [
            (self.ballot(serial), rec)
            for serial, rec in sorted(self.cast_records.items())
            if not self.record(serial).grace_spoiled
        ]

    def tally_aggregate(self):
        """Stage 1: one aggregate cell vector per counted ballot per contest."""
        return tally.aggregate_ballots(self.manifest, self.counted_casts())

    def tally_mix(self, rng, tamper_contest: str | None = None,
                  rounds: int | None = None) -> dict[str, list]:
        """Stage 2: mix every contest and post the transcripts.

        Returns the mixed cell vectors (private side included); the caller
        must keep them for the opening stage. `tamper_contest` is the
        mix_tamper adversary: it swaps one mixed output vector for a forged
        but individually valid cell vector, so every check downstream of the
        mix proof stays green and only the proof itself can catch it.
        """
        aggregates = self.tally_aggregate()
        rounds = rounds if rounds is not None else self.manifest.mix_rounds
        mixed = {}
        for contest in self.manifest.contests:
            vectors = aggregates[contest.contest_id]
            head = self.board.head_hash
            outputs, proof = tally.mix(self.manifest, vectors, rng, head, rounds)
            if tamper_contest == contest.contest_id:
                outputs = list(outputs)
                outputs[0] = [
                    # a valid abstention-weight cell the authority can open
                    _forged_cell(self.params, self.manifest.pk, rng)
                    for _ in outputs[0]
                ]
            in_comms = [[c.commitment for c in vec] for vec in vectors]
            out_comms = [[c.commitment for c in vec] for vec in outputs]
            self.board.append(board_mod.KIND_MIX_RECORD, tally.mix_record_body(
                self.params, contest.contest_id, in_comms, out_comms, proof))
            mixed[contest.contest_id] = outputs
        return mixed

    def tally_open(self, mixed: dict[str, list]) -> None:
        """Stage 3: post each contest's opened ciphertexts and the trustees'
        proven decryption shares."""
        params = self.params
        for contest in self.manifest.contests:
            opening_cells = []
            share_lists = []
            for vec in mixed[contest.contest_id]:
                opening_cells.append([c.ciphertext.to_dict(params) for c in vec])
                share_lists.append([
                    [s.to_dict(params) for s in
                     tally.decrypt_to_shares(params, self.trustees, c.ciphertext,
                                             self.manifest.threshold)]
                    for c in vec
                ])
            self.board.append(board_mod.KIND_OPENING_RECORD, {
                "contest_id": contest.contest_id,
                "cells": opening_cells,
            })
            self.board.append(board_mod.KIND_DECRYPTION_RECORD, {
                "contest_id": contest.contest_id,
                "shares": share_lists,
            })

    def tally_result(self, contest_ids: list[str] | None = None):
        """Stage 4: decode the opened cells and post per-contest results.

        Works from the board's public records alone, exactly as any observer
        would recompute them.
        """
        params = self.params
        components = tally.contest_components(self.manifest)
        commits = self.manifest.trustee_commits
        mix_posts = {p.body["contest_id"]: p.body
                     for p in self.board.of_kind(board_mod.KIND_MIX_RECORD)}
        openings = {p.body["contest_id"]: p.body
                    for p in self.board.of_kind(board_mod.KIND_OPENING_RECORD)}
        shares = {p.body["contest_id"]: p.body
                  for p in self.board.of_kind(board_mod.KIND_DECRYPTION_RECORD)}
        results = {}
        for contest in self.manifest.contests:
            cid = contest.contest_id
            if contest_ids is not None and cid not in contest_ids:
                continue
            decoded_vectors = []
            for pos, vec in enumerate(openings[cid]["cells"]):
                decoded = []
                for d, ct_dict in enumerate(vec):
                    cc = self.manifest.cell_contest(components[cid][d])
                    valid_set = tally.valid_packed_set(len(cc.candidates), cc.k)
                    ct = ElgCiphertext.from_dict(params, ct_dict)
                    cell_shares = [DecryptionShare.from_dict(params, s)
                                   for s in shares[cid]["shares"][pos][d]]
                    commitment = params.decode_hex(mix_posts[cid]["output"][pos][d])
                    m = tally.open_mixed_cell(params, commitment, ct, cell_shares,
                                              commits, self.manifest.threshold,
                                              valid_set)
                    decoded.append(None if m is None
                                   else tally.decode(m, len(cc.candidates), cc.k))
                decoded_vectors.append(decoded)
            result = tally.run_method(contest, decoded_vectors)
            self.board.append(board_mod.KIND_TALLY_RECORD, result.to_dict())
            results[cid] = result
        return results

    def run_tally(self, rng, tamper_contest: str | None = None):
        """All four tally stages in order; returns per-contest results."""
        mixed = self.tally_mix(rng, tamper_contest=tamper_contest)
        self.tally_open(mixed)
        return self.tally_result()

    # -- persistence --------------------------------------------------------

    def save_secrets(self, path) -> None:
        data = {
            "trustees": [
                {"index": t.index, "secret": format(t.secret, "x")} for t in self.trustees
            ],
            "serial_counter": self._serial_counter,
            "beacon": self.beacon.hex() if self.beacon else None,
            "records": {s: r.to_dict() for s, r in sorted(self.records.items())},
            "pairs": {
                pid: {"a": p.serial_a, "b": p.serial_b} for pid, p in sorted(self.pairs.items())
            },
            "cast_records": {
                s: {"ballot_id": c.ballot_id, "selections": c.selections}
                for s, c in sorted(self.cast_records.items())
            },
            "grace_revotes": sorted(self.grace_revotes),
            "printed": {bid: p.to_dict() for bid, p in sorted(self.printed.items())},
        }
        Path(path).write_text(json.dumps(data, indent=1, sort_keys=True))

    @classmethod
    def load(cls, manifest: ElectionManifest, secrets_path, board_path, trng=None) -> "Authority":
        data = json.loads(Path(secrets_path).read_text())
        params = manifest.group
        trustees = [
            TrusteeShare(t["index"], int(t["secret"], 16),
                         params.exp(params.g1, int(t["secret"], 16)))
            for t in data["trustees"]
        ]
        auth = cls(manifest, trustees, trng, BoardLog.load(board_path))
        auth._serial_counter = data["serial_counter"]
        auth.beacon = bytes.fromhex(data["beacon"]) if data["beacon"] else None
        auth.records = {s: BallotRecord.from_dict(r) for s, r in data["records"].items()}
        auth.pairs = {
            pid: BallotPair(pid, p["a"], p["b"]) for pid, p in data["pairs"].items()
        }
        auth.cast_records = {
            s: CastRecord(s, c["ballot_id"], c["selections"])
            for s, c in data["cast_records"].items()
        }
        auth.grace_revotes = set(data["grace_revotes"])
        auth.printed = {bid: PrintedBallot.from_dict(p) for bid, p in data["printed"].items()}
        return auth


def _forged_cell(params, pk, rng):
    from . import cce
    return cce.commit_encrypt(params, pk, 0, params.random_scalar(rng),
                              params.random_scalar(rng))


class _HashRng:
    """Minimal randrange source backed by the authority trng, so signing keys
    derive from the same seeded stream in simulations."""

    def __init__(self, params: GroupParams, seed: bytes):
        self.params = params
        self.seed = seed
        self.counter = 0

    def randrange(self, n: int) -> int:
        from .encoding import int_be, tagged_hash
        self.counter += 1
        return int.from_bytes(
            tagged_hash("rv/keyrng", self.seed, int_be(self.counter)), "big") % n


def default_contests() -> list[Contest]:
    return [
        Contest("mayor", ("Ada", "Bram", "Cleo", "Dev"), k=1),
        Contest("charter", ("Yes", "No", "Abstain-Formal"), k=2),
        Contest("council", ("Kim", "Lee", "Mori"), method="irv", ranks=3),
    ]


def make_authority(election_id: str, scheme: str, contests: list[Contest],
                   t: int = 2, n: int = 3, q: int | None = None, rng=None,
                   trng=None, shortcode_bytes: int = 2, ballot_keypairs: bool = False,
                   mix_rounds: int = 40, grace_window: int = 200) -> Authority:
    """Set up group, trustees, and manifest; returns a ready authority."""
    from .algebra import DEFAULT_Q

    params = setup(q=q or DEFAULT_Q, rng=rng)
    pk, shares = keygen(params, t, n, rng)
    manifest = ElectionManifest(
        election_id=election_id,
        scheme=scheme,
        contests=contests,
        group=params,
        pk=pk,
        threshold=t,
        trustee_count=n,
        trustee_commits={s.index: s.public_commit for s in shares},
        shortcode_bytes=shortcode_bytes,
        ballot_keypairs=ballot_keypairs,
        mix_rounds=mix_rounds,
        grace_window=grace_window,
    )
    return Authority(manifest, shares, trng)

"""Universal verifier: every publicly checkable claim, from public data only.

verify_election takes the board, the manifest, and optionally the beacon
value; it never sees authority secrets (the interface is the enforcement).
Each named check recomputes its slice of the election from scratch: hashes,
pair ids, beacon parities, spoiled-column regeneration, receipt code
resolution, mix inputs as commitment products over receipts, mix proofs,
decryption-share proofs, pairing openings, the decode step, the tally
method, the eligibility count, and dispute verdicts. The report is a
deterministic function of its inputs, byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import board as board_mod
from . import disputes, remotevote, tally
from .ballot import BATCH_INITIAL, ElectionManifest
from .board import BoardLog, verify_chain
from .elgamal import DecryptionShare, ElgCiphertext, verify_share
from .encoding import canonical_json
from .errors import ForgeryEvidence, ProtocolError

CHECK_NAMES = [
    "chain",
    "advance_commitment",
    "pairs",
    "spoil_compliance",
    "spoil_wellformed",
    "receipt_columns",
    "receipt_notice_exclusive",
    "mix",
    "decryption_shares",
    "openings",
    "tally",
    "eligibility",
    "disclaimer_bound",
    "disputes",
]

# Which post kinds each check consumes; the union must cover every kind, so
# no board content can escape scrutiny (asserted structurally in the tests).
CHECK_CONSUMES = {
    "chain": set(board_mod.POST_KINDS),
    "advance_commitment": {board_mod.KIND_BALLOT_PUBLICATION,
                           board_mod.KIND_BEACON_RECORD, board_mod.KIND_PAIR_RECORD},
    "pairs": {board_mod.KIND_PAIR_RECORD, board_mod.KIND_BALLOT_PUBLICATION},
    "spoil_compliance": {board_mod.KIND_SPOIL_REVEAL, board_mod.KIND_BEACON_RECORD,
                         board_mod.KIND_PAIR_RECORD},
    "spoil_wellformed": {board_mod.KIND_SPOIL_REVEAL, board_mod.KIND_BALLOT_PUBLICATION},
    "receipt_columns": {board_mod.KIND_CAST_RECEIPT, board_mod.KIND_BALLOT_PUBLICATION,
                        board_mod.KIND_PAIR_RECORD, board_mod.KIND_SPOIL_REVEAL},
    "receipt_notice_exclusive": {board_mod.KIND_CAST_RECEIPT, board_mod.KIND_SCRATCH_NOTICE},
    "mix": {board_mod.KIND_MIX_RECORD, board_mod.KIND_CAST_RECEIPT,
            board_mod.KIND_BALLOT_PUBLICATION, board_mod.KIND_SPOIL_REVEAL},
    "decryption_shares": {board_mod.KIND_DECRYPTION_RECORD, board_mod.KIND_OPENING_RECORD},
    "openings": {board_mod.KIND_OPENING_RECORD, board_mod.KIND_DECRYPTION_RECORD,
                 board_mod.KIND_MIX_RECORD, board_mod.KIND_TALLY_RECORD},
    "tally": {board_mod.KIND_TALLY_RECORD, board_mod.KIND_OPENING_RECORD},
    "eligibility": {board_mod.KIND_VOTER_LIST_RECORD, board_mod.KIND_CAST_RECEIPT,
                    board_mod.KIND_SCRATCH_NOTICE, board_mod.KIND_SPOIL_REVEAL,
                    board_mod.KIND_DISCLAIMER},
    "disclaimer_bound": {board_mod.KIND_DISCLAIMER, board_mod.KIND_TALLY_RECORD},
    "disputes": {board_mod.KIND_CHALLENGE_RECORD, board_mod.KIND_RESPONSE_RECORD,
                 board_mod.KIND_BALLOT_PUBLICATION},
}


@dataclass
class VerificationReport:
    checks: dict[str, tuple[str, str]] = field(default_factory=dict)  # name -> (status, detail)
    data: dict = field(default_factory=dict)

    def record(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks[name] = ("pass" if ok else "fail", detail)

    def failed(self, name: str) -> bool:
        return self.checks.get(name, ("fail", "missing"))[0] == "fail"

    @property
    def all_passed(self) -> bool:
        return all(status == "pass" for status, _ in self.checks.values())

    def failed_checks(self) -> list[str]:
        return [n for n, (status, _) in self.checks.items() if status == "fail"]

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "checks": {n: {"status": s, "detail": d} for n, (s, d) in self.checks.items()},
            "data": self.data,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def to_text(self) -> str:
        lines = []
        for name in CHECK_NAMES:
            status, detail = self.checks.get(name, ("fail", "check missing"))
            mark = "PASS" if status == "pass" else "FAIL"
            lines.append(f"[{mark}] {name}" + (f": {detail}" if detail else ""))
        lines.append(f"cheat bound (disclaimed ballots): {self.data.get('cheat_bound', 0)}")
        verdicts = self.data.get("dispute_verdicts", [])
        if verdicts:
            lines.append("dispute verdicts: " + ", ".join(
                f"{v['ballot_id'][:12]}..={v['verdict']}" for v in verdicts))
        lines.append("RESULT: " + ("ALL CHECKS PASSED" if self.all_passed else
                                   "FAILED " + ",".join(self.failed_checks())))
        return "\n".join(lines)


class _Context:
    """Shared parse of the board so checks stay independent but cheap."""

    def __init__(self, board: BoardLog, manifest: ElectionManifest, beacon: bytes | None):
        self.board = board
        self.manifest = manifest
        self.params = manifest.group
        self.pubs = {}  # serial -> post
        self.dup_pubs = []
        for p in board.of_kind(board_mod.KIND_BALLOT_PUBLICATION):
            serial = p.body.get("serial")
            if serial in self.pubs:
                self.dup_pubs.append(serial)
            else:
                self.pubs[serial] = p
        self.pair_posts = board.of_kind(board_mod.KIND_PAIR_RECORD)
        self.pairs = {p.body["ballot_id"]: p for p in self.pair_posts}
        self.serial_pair = {}
        for p in self.pair_posts:
            self.serial_pair[p.body["a"]] = (p.body["ballot_id"], "A")
            self.serial_pair[p.body["b"]] = (p.body["ballot_id"], "B")
        self.beacon_posts = board.of_kind(board_mod.KIND_BEACON_RECORD)
        self.beacon = beacon
        if self.beacon is None and self.beacon_posts:
            self.beacon = bytes.fromhex(self.beacon_posts[0].body["beacon"])
        self.reveals = [p for p in board.of_kind(board_mod.KIND_SPOIL_REVEAL)
                        if p.body.get("mode") == "column"]
        self.grace = [p for p in board.of_kind(board_mod.KIND_SPOIL_REVEAL)
                      if p.body.get("mode") == "grace"]
        self.receipts = board.of_kind(board_mod.KIND_CAST_RECEIPT)
        self.notices = board.of_kind(board_mod.KIND_SCRATCH_NOTICE)
        self.spoiled_serials = {}  # pair ballot_id -> revealed serial
        for p in self.reveals:
            self.spoiled_serials.setdefault(p.body["ballot_id"], p.body["serial"])
        self.grace_serials = {p.body["serial"] for p in self.grace}
        # decoded tally state handed from openings to tally
        self.decoded: dict[str, list] = {}


def _code_commitment(ctx: _Context, serial: str, cell_contest_id: str, code: str):
    pub = ctx.pubs.get(serial)
    if pub is None:
        return None
    contest = pub.body["contests"].get(cell_contest_id)
    if contest is None:
        return None
    for entry in contest["candidate_cells"]:
        if entry["code"] == code:
            return entry["commitment"]
    return None


def _check_chain(ctx: _Context, report: VerificationReport) -> None:
    if len(ctx.board) == 0:
        report.record("chain", False, "no posts")
        return
    bad = verify_chain(ctx.board)
    report.record("chain", bad is None, "" if bad is None else f"first bad seq {bad}")


def _check_advance_commitment(ctx, report) -> None:
    problems = []
    if ctx.dup_pubs:
        problems.append(f"serials published twice: {sorted(set(ctx.dup_pubs))}")
    if len(ctx.beacon_posts) > 1:
        problems.append("multiple beacon records")
    if ctx.beacon_posts:
        b_seq = ctx.beacon_posts[0].seq
        late = sorted(
            p.body["serial"] for p in ctx.pubs.values()
            if p.body.get("batch") == BATCH_INITIAL and p.seq > b_seq
        )
        if late:
            problems.append(f"initial publications after the beacon: {late}")
        late_pairs = [p.body["ballot_id"] for p in ctx.pair_posts if p.seq > b_seq]
        if late_pairs:
            problems.append(f"pair records after the beacon: {late_pairs}")
    report.record("advance_commitment", not problems, "; ".join(problems))


def _check_pairs(ctx, report) -> None:
    problems = []
    seen_serials = set()
    for post in ctx.pair_posts:
        pid = post.body["ballot_id"]
        a, b = post.body["a"], post.body["b"]
        pub_a, pub_b = ctx.pubs.get(a), ctx.pubs.get(b)
        if pub_a is None or pub_b is None:
            problems.append(f"pair {pid[:12]} references unpublished serials")
            continue
        for s in (a, b):
            if s in seen_serials:
                problems.append(f"serial {s} appears in two pairs")
            seen_serials.add(s)
        expected = remotevote.derive_pair_id(
            bytes.fromhex(pub_a.body["longcode"]), bytes.fromhex(pub_b.body["longcode"]))
        if expected != pid:
            problems.append(f"pair id mismatch for serials {a},{b}")
        for cid in pub_a.body["contests"]:
            codes = [e["code"] for e in pub_a.body["contests"][cid]["candidate_cells"]]
            codes += [e["code"] for e in
                      pub_b.body["contests"].get(cid, {"candidate_cells": []})["candidate_cells"]]
            if len(set(codes)) != len(codes):
                problems.append(f"shortcode collision in contest {cid} of pair {pid[:12]}")
    report.record("pairs", not problems, "; ".join(problems))


def _check_spoil_compliance(ctx, report) -> None:
    problems = []
    if ctx.pair_posts and ctx.beacon is None:
        report.record("spoil_compliance", False, "pairs exist but no beacon is known")
        return
    if ctx.beacon_posts and ctx.beacon is not None:
        if bytes.fromhex(ctx.beacon_posts[0].body["beacon"]) != ctx.beacon:
            problems.append("supplied beacon differs from the posted beacon record")
    by_pair = {}
    for p in ctx.reveals:
        by_pair.setdefault(p.body["ballot_id"], []).append(p)
    for pid, posts in by_pair.items():
        if pid not in ctx.pairs:
            problems.append(f"spoil reveal for unknown pair {pid[:12]}")
            continue
        if len(posts) > 1:
            problems.append(f"multiple reveals for pair {pid[:12]}")
        p = posts[0]
        expected = remotevote.select_spoil_column(ctx.beacon, pid)
        if p.body["column"] != expected:
            problems.append(
                f"pair {pid[:12]} revealed column {p.body['column']}, beacon selects {expected}")
        pair_body = ctx.pairs[pid].body
        if p.body["serial"] != pair_body["a" if p.body["column"] == "A" else "b"]:
            problems.append(f"reveal serial mismatch for pair {pid[:12]}")
        if ctx.beacon_posts and p.seq < ctx.beacon_posts[0].seq:
            problems.append(f"reveal for pair {pid[:12]} precedes the beacon")
    for pid in ctx.pairs:
        if pid not in by_pair:
            problems.append(f"no spoil reveal for pair {pid[:12]}")
    report.record("spoil_compliance", not problems, "; ".join(problems))


def _check_spoil_wellformed(ctx, report) -> None:
    problems = []
    for p in ctx.reveals:
        pub = ctx.pubs.get(p.body["serial"])
        if pub is None:
            problems.append(f"revealed serial {p.body['serial']} was never published")
            continue
        try:
            remotevote.check_reveal(ctx.manifest, p.body, pub.body)
        except ForgeryEvidence as exc:
            kinds = ",".join(str(m[0]) for m in exc.details) or "mismatch"
            problems.append(f"serial {p.body['serial']}: {kinds}")
        except (ProtocolError, ValueError, KeyError) as exc:
            problems.append(f"serial {p.body['serial']}: malformed reveal ({exc})")
    report.record("spoil_wellformed", not problems, "; ".join(problems))


def _check_receipt_columns(ctx, report) -> None:
    problems = []
    seen = set()
    known = {cc.cell_contest_id: cc for cc in ctx.manifest.cell_contests()}
    for post in ctx.receipts:
        serial = post.body["serial"]
        if serial in seen:
            problems.append(f"second receipt for serial {serial}")
        seen.add(serial)
        if serial not in ctx.pubs:
            problems.append(f"receipt for unpublished serial {serial}")
            continue
        for cid, codes in post.body["codes"].items():
            cc = known.get(cid)
            if cc is None or len(codes) > cc.k or len(set(codes)) != len(codes):
                problems.append(f"receipt for {serial}: bad code list in {cid}")
                continue
            for code in codes:
                if _code_commitment(ctx, serial, cid, code) is None:
                    problems.append(f"receipt code {code} not on ballot {serial} ({cid})")
        if serial in ctx.serial_pair:
            pid, column = ctx.serial_pair[serial]
            revealed = ctx.spoiled_serials.get(pid)
            if revealed is None:
                problems.append(f"receipt for paired serial {serial} but pair never spoiled")
            elif revealed == serial:
                problems.append(f"receipt uses the spoiled column of pair {pid[:12]}")
    report.record("receipt_columns", not problems, "; ".join(problems))


def _check_exclusive(ctx, report) -> None:
    receipt_ids = {p.body["ballot_id"] for p in ctx.receipts}
    notice_ids = {p.body["ballot_id"] for p in ctx.notices}
    both = sorted(receipt_ids & notice_ids)
    report.record("receipt_notice_exclusive", not both,
                  f"receipt and scratch notice for: {both}" if both else "")


def _counted_receipts(ctx) -> list:
    posts = [p for p in ctx.receipts if p.body["serial"] not in ctx.grace_serials]
    return sorted(posts, key=lambda p: p.body["serial"])


def _recompute_mix_inputs(ctx) -> dict[str, list[list[str]]]:
    """Aggregate commitments per contest from receipts and publications."""
    params = ctx.params
    components = tally.contest_components(ctx.manifest)
    out = {c.contest_id: [] for c in ctx.manifest.contests}
    for post in _counted_receipts(ctx):
        serial = post.body["serial"]
        pub = ctx.pubs.get(serial)
        if pub is None:
            raise ProtocolError(f"receipt for unpublished serial {serial}")
        for contest in ctx.manifest.contests:
            vector = []
            for cid in components[contest.contest_id]:
                cc = ctx.manifest.cell_contest(cid)
                codes = post.body["codes"].get(cid, [])
                acc = params.identity("G2")
                for code in codes:
                    hexval = _code_commitment(ctx, serial, cid, code)
                    if hexval is None:
                        raise ProtocolError(f"unresolvable receipt code {code}")
                    acc = params.mul(acc, params.decode_hex(hexval))
                absts = sorted(pub.body["contests"][cid]["abstention_commitments"])
                for hexval in absts[:cc.k - len(codes)]:
                    acc = params.mul(acc, params.decode_hex(hexval))
                vector.append(params.encode_hex(acc))
            out[contest.contest_id].append(vector)
    return out


def _check_mix(ctx, report) -> None:
    problems = []
    try:
        expected_inputs = _recompute_mix_inputs(ctx)
    except ProtocolError as exc:
        report.record("mix", False, f"cannot recompute inputs: {exc}")
        return
    mix_posts = {p.body["contest_id"]: p for p in ctx.board.of_kind(board_mod.KIND_MIX_RECORD)}
    if len(mix_posts) != len(ctx.board.of_kind(board_mod.KIND_MIX_RECORD)):
        problems.append("duplicate mix record for a contest")
    for contest in ctx.manifest.contests:
        cid = contest.contest_id
        post = mix_posts.get(cid)
        if post is None:
            if expected_inputs[cid]:
                problems.append(f"no mix record for contest {cid}")
            continue
        body = post.body
        if bytes.fromhex(body["head"]) != post.prev_hash:
            problems.append(f"{cid}: mix transcript not bound to its board position")
            continue
        if body["input"] != expected_inputs[cid]:
            problems.append(f"{cid}: mix input differs from aggregate of receipts")
            continue
        if len(body["output"]) != len(body["input"]):
            problems.append(f"{cid}: mix output count differs from input count")
            continue
        inputs, outputs, proof = tally.mix_proof_from_body(ctx.params, body)
        bad = tally.verify_mix(ctx.params, inputs, outputs, proof)
        if bad is not None:
            problems.append(f"{cid}: mix proof rejected at round {bad}")
    report.record("mix", not problems, "; ".join(problems))


def _contest_records(ctx, kind: str) -> dict[str, dict]:
    return {p.body["contest_id"]: p.body for p in ctx.board.of_kind(kind)}


def _check_decryption_shares(ctx, report) -> None:
    params = ctx.params
    t = ctx.manifest.threshold
    commits = ctx.manifest.trustee_commits
    openings = _contest_records(ctx, board_mod.KIND_OPENING_RECORD)
    problems = []
    for cid, body in _contest_records(ctx, board_mod.KIND_DECRYPTION_RECORD).items():
        opening = openings.get(cid)
        if opening is None:
            problems.append(f"{cid}: decryption shares without an opening record")
            continue
        if len(body["shares"]) != len(opening["cells"]):
            problems.append(f"{cid}: share count differs from opened cell count")
            continue
        for pos, (vec_shares, vec_cells) in enumerate(zip(body["shares"], opening["cells"])):
            for d, (cell_shares, ct_dict) in enumerate(zip(vec_shares, vec_cells)):
                try:
                    ct = ElgCiphertext.from_dict(params, ct_dict)
                    shares = [DecryptionShare.from_dict(params, s) for s in cell_shares]
                except (KeyError, ValueError):
                    problems.append(f"{cid}: malformed share at position {pos}.{d}")
                    continue
                valid = [s for s in shares if s.index in commits
                         and verify_share(params, commits[s.index], ct, s)]
                if len({s.index for s in valid}) < t:
                    problems.append(f"{cid}: fewer than {t} valid shares at {pos}.{d}")
    report.record("decryption_shares", not problems, "; ".join(problems))


def _check_openings(ctx, report) -> None:
    params = ctx.params
    manifest = ctx.manifest
    t = manifest.threshold
    commits = manifest.trustee_commits
    components = tally.contest_components(manifest)
    mix_posts = {p.body["contest_id"]: p.body
                 for p in ctx.board.of_kind(board_mod.KIND_MIX_RECORD)}
    openings = _contest_records(ctx, board_mod.KIND_OPENING_RECORD)
    share_records = _contest_records(ctx, board_mod.KIND_DECRYPTION_RECORD)
    tallies = _contest_records(ctx, board_mod.KIND_TALLY_RECORD)
    problems = []
    for contest in manifest.contests:
        cid = contest.contest_id
        mix_body = mix_posts.get(cid)
        if mix_body is None:
            continue
        opening = openings.get(cid)
        shares_body = share_records.get(cid)
        claim = tallies.get(cid)
        if opening is None or shares_body is None or claim is None:
            problems.append(f"{cid}: missing opening, decryption, or tally record")
            continue
        out_comms = mix_body["output"]
        if len(opening["cells"]) != len(out_comms):
            problems.append(f"{cid}: opened cell count differs from mix output")
            continue
        decoded_vectors = []
        ok = True
        for pos, vec in enumerate(opening["cells"]):
            decoded = []
            for d, ct_dict in enumerate(vec):
                cc = manifest.cell_contest(components[cid][d])
                valid_set = tally.valid_packed_set(len(cc.candidates), cc.k)
                try:
                    ct = ElgCiphertext.from_dict(params, ct_dict)
                    shares = [DecryptionShare.from_dict(params, s)
                              for s in shares_body["shares"][pos][d]]
                    commitment = params.decode_hex(out_comms[pos][d])
                    m = tally.open_mixed_cell(params, commitment, ct, shares,
                                              commits, t, valid_set)
                except (ProtocolError, KeyError, ValueError, IndexError) as exc:
                    problems.append(f"{cid}: opening failed at {pos}.{d} ({exc})")
                    ok = False
                    break
                decoded.append(None if m is None
                               else tally.decode(m, len(cc.candidates), cc.k))
            if not ok:
                break
            decoded_vectors.append(decoded)
        if not ok:
            continue
        ctx.decoded[cid] = decoded_vectors
        expected = tally.run_method(contest, decoded_vectors)
        if expected.per_ballot != claim["per_ballot"] or expected.invalid != claim["invalid"]:
            problems.append(f"{cid}: claimed decoded values differ from recomputation")
    report.record("openings", not problems, "; ".join(problems))


def _check_tally(ctx, report) -> None:
    tallies = _contest_records(ctx, board_mod.KIND_TALLY_RECORD)
    problems = []
    for contest in ctx.manifest.contests:
        cid = contest.contest_id
        claim = tallies.get(cid)
        decoded = ctx.decoded.get(cid)
        if claim is None:
            if decoded is not None:
                problems.append(f"{cid}: no tally record")
            continue
        if decoded is None:
            problems.append(f"{cid}: tally cannot be recomputed (openings unusable)")
            continue
        expected = tally.run_method(contest, decoded).to_dict()
        if expected != claim:
            problems.append(f"{cid}: tally record differs from recomputation")
    report.record("tally", not problems, "; ".join(problems))


def _check_eligibility(ctx, report) -> None:
    problems = []
    lists = ctx.board.of_kind(board_mod.KIND_VOTER_LIST_RECORD)
    if len(lists) != 1:
        report.record("eligibility", False,
                      "missing voter list" if not lists else "multiple voter lists")
        return
    voters = lists[0].body["count"]
    receipt_serials = {p.body["serial"]: p for p in ctx.receipts}
    trigger_seq = {}
    for p in ctx.notices + ctx.board.of_kind(board_mod.KIND_DISCLAIMER):
        trigger_seq.setdefault(p.body["ballot_id"], p.seq)
    valid_grace = set()
    for p in ctx.grace:
        serial = p.body["serial"]
        bid = p.body["ballot_id"]
        if serial not in receipt_serials:
            problems.append(f"grace spoil names unreceipted serial {serial}")
            continue
        if bid not in trigger_seq:
            problems.append(f"grace spoil for {bid[:12]} without notice or disclaimer")
            continue
        if p.seq > trigger_seq[bid] + ctx.manifest.grace_window:
            problems.append(f"grace spoil for {bid[:12]} outside its window")
            continue
        if serial in valid_grace:
            problems.append(f"serial {serial} grace-spoiled twice")
            continue
        valid_grace.add(serial)
    votes = len(receipt_serials) - len(valid_grace)
    if votes != voters:
        problems.append(f"{votes} countable votes but {voters} listed voters")
    report.record("eligibility", not problems, "; ".join(problems))
    ctx_data = {"voters": voters, "receipts": len(receipt_serials),
                "grace_spoiled": len(valid_grace)}
    return ctx_data


def _check_disclaimer_bound(ctx, report) -> int:
    disclaimers = ctx.board.of_kind(board_mod.KIND_DISCLAIMER)
    problems = []
    first_tally = ctx.board.first_of_kind(board_mod.KIND_TALLY_RECORD)
    if first_tally is not None:
        late = [p.body["ballot_id"] for p in disclaimers if p.seq > first_tally.seq]
        if late:
            problems.append(f"disclaimers posted after results: {late}")
    report.record("disclaimer_bound", not problems, "; ".join(problems))
    return len(disclaimers)


def _check_disputes(ctx, report) -> list[dict]:
    problems = []
    verdicts = []
    challenges = ctx.board.of_kind(board_mod.KIND_CHALLENGE_RECORD)
    responses = ctx.board.of_kind(board_mod.KIND_RESPONSE_RECORD)
    used = set()
    for ch in challenges:
        match = None
        for resp in responses:
            if resp.seq in used or resp.seq < ch.seq:
                continue
            if all(resp.body.get(k) == ch.body.get(k)
                   for k in ("ballot_id", "serial", "cell_contest_id", "shortcode")):
                match = resp
                break
        if match is None:
            problems.append(f"unanswered challenge at seq {ch.seq}")
            continue
        used.add(match.seq)
        pub = ctx.pubs.get(ch.body["serial"])
        if pub is None:
            problems.append(f"challenge at seq {ch.seq} names unpublished serial")
            continue
        verdict = disputes.adjudicate(ctx.params, ctx.manifest.pk, ch.body,
                                      match.body, pub.body)
        verdicts.append({
            "ballot_id": ch.body["ballot_id"],
            "shortcode": ch.body["shortcode"],
            "verdict": verdict,
        })
    stray = [p.seq for p in responses if p.seq not in used]
    if stray:
        problems.append(f"responses matching no challenge: {stray}")
    report.record("disputes", not problems, "; ".join(problems))
    return verdicts


def verify_election(board: BoardLog, manifest: ElectionManifest,
                    beacon: bytes | None = None) -> VerificationReport:
    """Run every check over the public record; pure and deterministic."""
    ctx = _Context(board, manifest, beacon)
    report = VerificationReport()
    _check_chain(ctx, report)
    _check_advance_commitment(ctx, report)
    _check_pairs(ctx, report)
    _check_spoil_compliance(ctx, report)
    _check_spoil_wellformed(ctx, report)
    _check_receipt_columns(ctx, report)
    _check_exclusive(ctx, report)
    _check_mix(ctx, report)
    _check_decryption_shares(ctx, report)
    _check_openings(ctx, report)
    _check_tally(ctx, report)
    counts = _check_eligibility(ctx, report) or {}
    cheat_bound = _check_disclaimer_bound(ctx, report)
    verdicts = _check_disputes(ctx, report)
    report.data = {
        **counts,
        "cheat_bound": cheat_bound,
        "dispute_verdicts": verdicts,
        "posts": len(board),
    }
    return report


def check_eligibility(board: BoardLog, manifest: ElectionManifest) -> bool:
    """Standalone eligibility check: countable votes equal listed voters."""
    ctx = _Context(board, manifest, None)
    report = VerificationReport()
    _check_eligibility(ctx, report)
    return not report.failed("eligibility")

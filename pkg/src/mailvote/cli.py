"""Command-line toolkit driving all flows against an election directory.

An election directory holds manifest.json (public), board.jsonl (public),
secrets.json (authority-private), and tally_state.json (authority-private,
between the mix and open stages). Every state-changing command takes
--seed; identical starting state, command, and seed produce byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import board as board_mod
from . import cce, disputes, remotevote, safevote
from .ballot import Contest, ElectionManifest, PrintedBallot
from .board import BoardLog, verify_chain
from .election import Authority, default_contests, make_authority
from .elgamal import ElgCiphertext
from .errors import ProtocolError
from .safevote import ScratchState
from .simulate import SimulationConfig, run_election, simulate
from .verify import verify_election

MANIFEST = "manifest.json"
SECRETS = "secrets.json"
BOARD = "board.jsonl"
TALLY_STATE = "tally_state.json"


def _dir(args) -> Path:
    d = Path(args.dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _rng(args) -> random.Random:
    return random.Random(args.seed)


def _load_manifest(path: Path) -> ElectionManifest:
    return ElectionManifest.from_dict(json.loads(path.read_text()))


def _load_authority(args) -> Authority:
    d = _dir(args)
    manifest = _load_manifest(d / MANIFEST)
    rng = _rng(args)
    auth = Authority.load(manifest, d / SECRETS, d / BOARD, trng=lambda: rng.randbytes(32))
    return auth


def _save_authority(args, auth: Authority) -> None:
    d = _dir(args)
    auth.board.save(d / BOARD)
    auth.save_secrets(d / SECRETS)


def _parse_contests(path: str | None) -> list[Contest]:
    if path is None:
        return default_contests()
    data = json.loads(Path(path).read_text())
    return [
        Contest(c["contest_id"], tuple(c["candidates"]), c.get("k", 1),
                c.get("method", "plurality"), c.get("ranks", 0))
        for c in data
    ]


# ---------------------------------------------------------------------------
# subcommand handlers


def cmd_setup(args) -> int:
    d = _dir(args)
    rng = _rng(args)
    auth = make_authority(
        args.election_id, args.scheme, _parse_contests(args.contests),
        t=args.threshold, n=args.trustees, q=args.q, rng=rng,
        trng=lambda: rng.randbytes(32), shortcode_bytes=args.shortcode_bytes,
        ballot_keypairs=args.keypairs, mix_rounds=args.mix_rounds,
        grace_window=args.grace_window,
    )
    (d / MANIFEST).write_text(json.dumps(auth.manifest.to_dict(), indent=1, sort_keys=True))
    _save_authority(args, auth)
    print(f"election {args.election_id!r} ({args.scheme}) set up in {d}")
    return 0


def cmd_ballot_gen(args) -> int:
    auth = _load_authority(args)
    for _ in range(args.count):
        ballot = auth.new_ballot(batch=args.batch)
        print(f"generated {ballot.serial} id={ballot.ballot_id}")
    _save_authority(args, auth)
    return 0


def cmd_ballot_print(args) -> int:
    auth = _load_authority(args)
    if args.pair_id:
        printed = auth.print_ballot(pair_id=args.pair_id)
    else:
        printed = auth.print_ballot(serial=args.serial)
    text = json.dumps(printed.to_dict(), indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text)
        print(f"printed ballot {printed.ballot_id} -> {args.out}")
    else:
        print(text)
    _save_authority(args, auth)
    return 0


def cmd_board_verify(args) -> int:
    log = BoardLog.load(args.board)
    bad = verify_chain(log)
    if not log.posts:
        print("board empty: no posts")
        return 1
    if bad is None:
        print(f"board ok: {len(log)} posts, head {log.head_hash.hex()}")
        return 0
    print(f"board BROKEN at seq {bad}")
    return 1


def cmd_rv_pair(args) -> int:
    auth = _load_authority(args)
    serials = [s for s, r in sorted(auth.records.items())
               if r.batch == "initial" and r.pair_id is None]
    pairs = auth.make_pairs(serials)
    for p in pairs:
        print(f"pair {p.ballot_id}: A={p.serial_a} B={p.serial_b}")
    _save_authority(args, auth)
    return 0


def cmd_rv_spoil(args) -> int:
    auth = _load_authority(args)
    beacon = bytes.fromhex(args.beacon)
    auth.post_beacon(beacon)
    auth.spoil_pairs()
    for pid in sorted(auth.pairs):
        print(f"pair {pid}: spoiled column "
              f"{remotevote.select_spoil_column(beacon, pid)}")
    _save_authority(args, auth)
    return 0


def cmd_rv_image(args) -> int:
    d = _dir(args)
    manifest = _load_manifest(d / MANIFEST)
    board = BoardLog.load(d / BOARD)
    image = remotevote.reconstruct_partial_image(manifest, args.ballot_id, board)
    print(f"ballot {image.ballot_id}: spoiled column {image.column} (serial {image.serial})")
    for cid, row in image.codes.items():
        for cand, code in row.items():
            print(f"  {cid:>16} {cand:>16} {code}")
    return 0


def cmd_sv_challenge(args) -> int:
    manifest = _load_manifest(Path(args.manifest))
    printed = PrintedBallot.from_dict(json.loads(Path(args.ballot).read_text()))
    report = safevote.challenge(manifest, printed, bytes.fromhex(args.r),
                                column=args.column)
    print(f"ballot {report.ballot_id}: {report.verdict}")
    if not report.id_ok:
        print(f"  id mismatch: printed {report.id_printed} expected {report.id_expected}")
    for row in report.discrepant_rows():
        print(f"  {row.cell_contest_id}/{row.candidate}: printed {row.printed} "
              f"expected {row.expected}")
    return 0 if report.consistent else 1


def cmd_sv_return(args) -> int:
    auth = _load_authority(args)
    marks = json.loads(Path(args.marks).read_text())
    ballot_id = args.ballot_id
    if args.scratched:
        serial = auth.cast_serial_for(ballot_id, args.column)
        state = ScratchState(intact=False, revealed_r=auth.record(serial).r)
    else:
        state = ScratchState(intact=True)
    disposition = safevote.process_return(auth, ballot_id, marks, state,
                                          cast_column=args.column)
    print(json.dumps(disposition, sort_keys=True))
    _save_authority(args, auth)
    return 0


def cmd_sv_grace_spoil(args) -> int:
    auth = _load_authority(args)
    post = safevote.grace_spoil(auth, args.id)
    print(f"grace spoil posted at seq {post.seq} (excluded serial "
          f"{post.body['serial']})")
    _save_authority(args, auth)
    return 0


def cmd_close(args) -> int:
    auth = _load_authority(args)
    voters = json.loads(Path(args.voters).read_text()) if args.voters else \
        sorted({c.ballot_id for c in auth.cast_records.values()})
    post = auth.close_voting(voters)
    print(f"voter list posted: {post.body['count']} voters")
    _save_authority(args, auth)
    return 0


def cmd_tally_aggregate(args) -> int:
    auth = _load_authority(args)
    aggregates = auth.tally_aggregate()
    for cid, vectors in aggregates.items():
        print(f"{cid}: {len(vectors)} aggregate cell vectors")
    return 0


def _cell_to_dict(params, cell: cce.CCECell) -> dict:
    return {
        "commitment": params.encode_hex(cell.commitment),
        "ciphertext": cell.ciphertext.to_dict(params),
        "s": format(cell.opening.s, "x"),
        "m": cell.opening.m,
        "r": format(cell.opening.r, "x"),
    }


def _cell_from_dict(params, d: dict) -> cce.CCECell:
    return cce.CCECell(
        params.decode_hex(d["commitment"]),
        ElgCiphertext.from_dict(params, d["ciphertext"]),
        cce.CellOpening(int(d["s"], 16), d["m"], int(d["r"], 16)),
    )


def cmd_tally_mix(args) -> int:
    auth = _load_authority(args)
    mixed = auth.tally_mix(_rng(args), rounds=args.rounds)
    state = {
        cid: [[_cell_to_dict(auth.params, c) for c in vec] for vec in vectors]
        for cid, vectors in mixed.items()
    }
    (_dir(args) / TALLY_STATE).write_text(json.dumps(state, indent=1, sort_keys=True))
    for cid, vectors in mixed.items():
        print(f"{cid}: mixed {len(vectors)} vectors "
              f"({args.rounds or auth.manifest.mix_rounds} rounds)")
    _save_authority(args, auth)
    return 0


def cmd_tally_open(args) -> int:
    auth = _load_authority(args)
    state = json.loads((_dir(args) / TALLY_STATE).read_text())
    mixed = {
        cid: [[_cell_from_dict(auth.params, c) for c in vec] for vec in vectors]
        for cid, vectors in state.items()
    }
    auth.tally_open(mixed)
    print("openings and decryption shares posted")
    _save_authority(args, auth)
    return 0


def cmd_tally_result(args) -> int:
    auth = _load_authority(args)
    contest_ids = None
    if args.method:
        contest_ids = [c.contest_id for c in auth.manifest.contests
                       if c.method == args.method]
    results = auth.tally_result(contest_ids)
    for cid, result in results.items():
        print(f"{cid}: {json.dumps(result.result, sort_keys=True)}")
    _save_authority(args, auth)
    return 0


def cmd_dispute_file(args) -> int:
    auth = _load_authority(args)
    evidence = disputes.PartialEvidence(args.ballot_id, args.serial,
                                        args.contest, args.code, args.partial)
    signature = None
    vk = None
    if args.sign_key:
        secret = int(args.sign_key, 16)
        signature = disputes.sign(auth.params, secret, evidence.message())
        vk = auth.params.exp(auth.params.g1, secret)
    post = disputes.file_challenge(auth.board, auth.params, evidence, signature, vk)
    print(f"challenge posted at seq {post.seq}")
    _save_authority(args, auth)
    return 0


def _challenge_at(board: BoardLog, seq: int) -> dict:
    post = board.posts[seq]
    if post.kind != board_mod.KIND_CHALLENGE_RECORD:
        raise ProtocolError(f"post {seq} is a {post.kind}, not a challenge")
    return post.body


def cmd_dispute_respond(args) -> int:
    auth = _load_authority(args)
    post = auth.respond_to_challenge(_challenge_at(auth.board, args.seq))
    print(f"response posted at seq {post.seq}")
    _save_authority(args, auth)
    return 0


def cmd_dispute_adjudicate(args) -> int:
    d = _dir(args)
    manifest = _load_manifest(d / MANIFEST)
    board = BoardLog.load(d / BOARD)
    challenge = _challenge_at(board, args.seq)
    response = None
    for post in board.of_kind(board_mod.KIND_RESPONSE_RECORD):
        if post.seq > args.seq and post.body.get("shortcode") == challenge["shortcode"] \
                and post.body.get("ballot_id") == challenge["ballot_id"]:
            response = post.body
            break
    if response is None:
        print("verdict: ResponseInvalid (no response posted)")
        return 1
    publication = None
    for post in board.of_kind(board_mod.KIND_BALLOT_PUBLICATION):
        if post.body["serial"] == challenge["serial"]:
            publication = post.body
            break
    verdict = disputes.adjudicate(manifest.group, manifest.pk, challenge,
                                  response, publication)
    print(f"verdict: {verdict}")
    return 0


def cmd_dispute_disclaim(args) -> int:
    auth = _load_authority(args)
    post = disputes.post_disclaimer(auth.board, args.ballot_id, args.contest)
    print(f"disclaimer posted at seq {post.seq}")
    _save_authority(args, auth)
    return 0


def cmd_verify(args) -> int:
    manifest = _load_manifest(Path(args.manifest))
    board = BoardLog.load(args.board)
    beacon = bytes.fromhex(args.beacon) if args.beacon else None
    report = verify_election(board, manifest, beacon)
    if args.json:
        print(report.to_json())
    else:
        print(report.to_text())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
    return 0 if report.all_passed else 1


def cmd_simulate(args) -> int:
    config = SimulationConfig.from_dict(json.loads(Path(args.config).read_text()))
    if args.seed is not None:
        config.seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
    result = simulate(config)
    low, high = result.confidence_interval()
    print(f"strategy={config.strategy.get('name', 'none')} scheme={config.scheme} "
          f"trials={result.trials}")
    print(f"detections={result.detections} rate={result.rate:.4f} "
          f"ci95=[{low:.4f},{high:.4f}]")
    if result.verdict_counts:
        print(f"dispute verdicts: {json.dumps(result.verdict_counts, sort_keys=True)}")
    if args.artifacts:
        outcome = run_election(config)
        d = Path(args.artifacts)
        d.mkdir(parents=True, exist_ok=True)
        outcome.authority.board.save(d / BOARD)
        outcome.authority.save_secrets(d / SECRETS)
        (d / MANIFEST).write_text(
            json.dumps(outcome.authority.manifest.to_dict(), indent=1, sort_keys=True))
        (d / "report.json").write_text(outcome.report.to_json() + "\n")
        (d / "report.txt").write_text(outcome.report.to_text() + "\n")
        ballots = d / "ballots"
        ballots.mkdir(exist_ok=True)
        for bid, printed in sorted(outcome.authority.printed.items()):
            (ballots / f"{bid[:16]}.json").write_text(
                json.dumps(printed.to_dict(), indent=1, sort_keys=True))
        print(f"artifacts of one election written to {d}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_dir_seed(p, seed_default: int = 0):
    p.add_argument("--dir", required=True, help="election directory")
    p.add_argument("--seed", type=int, default=seed_default,
                   help="seed for any randomness this command draws")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mailvote",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("setup", help="create group, trustees, manifest, empty board")
    _add_dir_seed(p)
    p.add_argument("--scheme", choices=["remotevote", "safevote", "hybrid"],
                   required=True)
    p.add_argument("--election-id", default="election")
    p.add_argument("--contests", help="JSON file of contest definitions")
    p.add_argument("--threshold", "-t", type=int, default=2)
    p.add_argument("--trustees", "-n", type=int, default=3)
    p.add_argument("--q", type=int, default=None, help="group order override")
    p.add_argument("--shortcode-bytes", type=int, default=2)
    p.add_argument("--keypairs", action="store_true", help="per-ballot signing keys")
    p.add_argument("--mix-rounds", type=int, default=40)
    p.add_argument("--grace-window", type=int, default=200)
    p.set_defaults(func=cmd_setup)

    ballot = sub.add_parser("ballot", help="ballot generation and printing").add_subparsers(
        dest="sub", required=True)
    p = ballot.add_parser("gen", help="generate and publish encrypted ballots")
    _add_dir_seed(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--batch", default="initial",
                   choices=["initial", "replacement", "duplicate"])
    p.set_defaults(func=cmd_ballot_gen)
    p = ballot.add_parser("print", help="produce a printed-ballot file")
    _add_dir_seed(p)
    p.add_argument("--pair-id", help="pair id (remotevote/hybrid)")
    p.add_argument("--serial", help="serial (safevote)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_ballot_print)

    board_p = sub.add_parser("board", help="bulletin board tools").add_subparsers(
        dest="sub", required=True)
    p = board_p.add_parser("verify", help="check the hash chain")
    p.add_argument("board", help="board file")
    p.set_defaults(func=cmd_board_verify)

    rv = sub.add_parser("remotevote", help="pairing, beacon spoiling, images"
                        ).add_subparsers(dest="sub", required=True)
    p = rv.add_parser("pair", help="pair all unpaired initial ballots")
    _add_dir_seed(p)
    p.set_defaults(func=cmd_rv_pair)
    p = rv.add_parser("spoil", help="post the beacon and spoil one column per pair")
    _add_dir_seed(p)
    p.add_argument("--beacon", required=True, help="beacon value, hex")
    p.set_defaults(func=cmd_rv_spoil)
    p = rv.add_parser("image", help="rebuild a ballot's spoiled-column image")
    _add_dir_seed(p)
    p.add_argument("--ballot-id", required=True)
    p.set_defaults(func=cmd_rv_image)

    sv = sub.add_parser("safevote", help="scratch challenges and returns"
                        ).add_subparsers(dest="sub", required=True)
    p = sv.add_parser("challenge", help="offline scratch-off challenge")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ballot", required=True, help="printed-ballot JSON file")
    p.add_argument("--r", required=True, help="revealed R, hex")
    p.add_argument("--column", choices=["A", "B"], help="hybrid column")
    p.set_defaults(func=cmd_sv_challenge)
    p = sv.add_parser("return", help="process a returned ballot")
    _add_dir_seed(p)
    p.add_argument("--ballot-id", required=True)
    p.add_argument("--marks", required=True, help="JSON marks file")
    p.add_argument("--scratched", action="store_true")
    p.add_argument("--column", choices=["A", "B"], help="cast column override")
    p.set_defaults(func=cmd_sv_return)
    p = sv.add_parser("grace-spoil", help="spoil a duplicated/disclaimed ballot")
    _add_dir_seed(p)
    p.add_argument("--id", required=True, help="ballot id")
    p.set_defaults(func=cmd_sv_grace_spoil)

    p = sub.add_parser("close", help="post the voter list record")
    _add_dir_seed(p)
    p.add_argument("--voters", help="JSON file listing voter ids")
    p.set_defaults(func=cmd_close)

    tly = sub.add_parser("tally", help="two-stage verifiable tally").add_subparsers(
        dest="sub", required=True)
    p = tly.add_parser("aggregate", help="stage 1: per-ballot aggregation")
    _add_dir_seed(p)
    p.set_defaults(func=cmd_tally_aggregate)
    p = tly.add_parser("mix", help="stage 2: verifiable mix per contest")
    _add_dir_seed(p)
    p.add_argument("--rounds", "--lambda", dest="rounds", type=int, default=None)
    p.set_defaults(func=cmd_tally_mix)
    p = tly.add_parser("open", help="stage 3: openings and decryption shares")
    _add_dir_seed(p)
    p.set_defaults(func=cmd_tally_open)
    p = tly.add_parser("result", help="stage 4: decode and post results")
    _add_dir_seed(p)
    p.add_argument("--method", choices=["plurality", "irv"],
                   help="only contests of this method")
    p.set_defaults(func=cmd_tally_result)

    dp = sub.add_parser("dispute", help="collection-accountability disputes"
                        ).add_subparsers(dest="sub", required=True)
    p = dp.add_parser("file", help="post a voter challenge")
    _add_dir_seed(p)
    p.add_argument("--ballot-id", required=True)
    p.add_argument("--serial", required=True)
    p.add_argument("--contest", required=True, help="cell contest id")
    p.add_argument("--code", required=True, help="shortcode of the claimed cell")
    p.add_argument("--partial", required=True, help="16-byte ciphertext prefix, hex")
    p.add_argument("--sign-key", help="ballot signing key, hex")
    p.set_defaults(func=cmd_dispute_file)
    p = dp.add_parser("respond", help="authority opens the disputed cell")
    _add_dir_seed(p)
    p.add_argument("--seq", type=int, required=True, help="challenge post seq")
    p.set_defaults(func=cmd_dispute_respond)
    p = dp.add_parser("adjudicate", help="third-party verdict from board data")
    _add_dir_seed(p)
    p.add_argument("--seq", type=int, required=True, help="challenge post seq")
    p.set_defaults(func=cmd_dispute_adjudicate)
    p = dp.add_parser("disclaim", help="flag a ballot with contestable evidence")
    _add_dir_seed(p)
    p.add_argument("--ballot-id", required=True)
    p.add_argument("--contest", required=True)
    p.set_defaults(func=cmd_dispute_disclaim)

    p = sub.add_parser("verify", help="universal verifier over public data")
    p.add_argument("--board", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--beacon", help="beacon hex (defaults to the board's record)")
    p.add_argument("--json", action="store_true", help="emit the canonical JSON report")
    p.add_argument("--out", help="also write the JSON report to this file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="Monte Carlo adversary simulator")
    p.add_argument("--config", required=True, help="JSON simulation config")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--trials", type=int, default=None, help="override config trials")
    p.add_argument("--artifacts", help="write one election's artifacts here")
    p.set_defaults(func=cmd_simulate)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ProtocolError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

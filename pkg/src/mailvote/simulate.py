"""Full election lifecycles and the Monte Carlo adversary simulator.

run_election drives one complete election for any scheme with simulated
voters and an optional adversary; simulate repeats it over independent
seeded trials and measures the detection rate. Detection means: the
universal verifier failed a check, a verifying voter's own check failed
(partial-image mismatch, scratch challenge discrepancy, receipt mismatch,
or an unexpected scratch notice), or a dispute ended VoterProven.

Adversary strategies:
  forge_cell              codes of two candidates swapped on the printed
                          ballot (a misprinted/forged encryption); the cast
                          follows the printed layout so the vote flips
  wrong_receipt           the board receipt misrepresents the selections
  drop_ballots            returned ballots silently never processed; only
                          the eligibility count can notice, and voters hold
                          no proof (the acknowledged gap)
  mix_tamper              one mixed output vector substituted with a forged
                          but individually valid cell vector
  scratch_duplicate_alter a mailer scratches a victim's panel and alters
                          the marks, hiding behind receipt suppression

All randomness, including commitment true randomness, flows from one seeded
generator; that is fine for simulation and flagged unusable for production.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import safevote
from .ballot import FORM_SAFEVOTE, Contest, PrintedBallot, PrintedRow
from .disputes import (
    VERDICT_VOTER_PROVEN,
    PartialEvidence,
    file_challenge,
    sign,
)
from .election import Authority, make_authority
from .encoding import int_be, tagged_hash
from .errors import ForgeryEvidence, ProtocolError
from .remotevote import reconstruct_partial_image, select_spoil_column
from .safevote import ScratchState
from .tally import ContestResult, decode, expand_marks, run_method
from .verify import VerificationReport, verify_election

STRATEGIES = ("none", "forge_cell", "wrong_receipt", "drop_ballots",
              "mix_tamper", "scratch_duplicate_alter")


@dataclass
class SimulationConfig:
    scheme: str = "remotevote"
    voters: int = 8
    contests: list[Contest] = field(default_factory=lambda: [
        Contest("race", ("Ada", "Bram", "Cleo"), k=1),
    ])
    strategy: dict = field(default_factory=lambda: {"name": "none"})
    verify_fraction: float = 1.0
    challengers: int = 0       # scratch-challenge (safevote: then replace; hybrid: then cast)
    scratch_returns: int = 0   # safevote voters returning with removed scratch
    grace_spoilers: int = 0    # duplicated voters who grace-spoil and revote
    trials: int = 1
    seed: int = 0
    threshold: int = 2
    trustees: int = 3
    q: int | None = None
    mix_rounds: int = 16
    shortcode_bytes: int = 2
    ballot_keypairs: bool = False
    eligibility_check: bool = True

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        d = dict(d)
        if "contests" in d:
            d["contests"] = [
                Contest(c["contest_id"], tuple(c["candidates"]), c.get("k", 1),
                        c.get("method", "plurality"), c.get("ranks", 0))
                for c in d["contests"]
            ]
        return cls(**d)


@dataclass
class SimVoter:
    voter_id: str
    marks: dict
    verifies: bool
    ballot_id: str = ""
    printed: PrintedBallot | None = None
    recorded_codes: dict = field(default_factory=dict)
    forged_column: str | None = None
    returned: bool = False
    dropped: bool = False
    detections: list[str] = field(default_factory=list)


@dataclass
class ElectionOutcome:
    authority: Authority
    report: VerificationReport
    voters: list[SimVoter]
    results: dict[str, ContestResult]
    expected: dict[str, ContestResult]
    challenge_reports: list
    detected: bool
    ground_truth_ok: bool
    ignored_checks: tuple[str, ...] = ()


@dataclass
class SimulationResult:
    trials: int
    detections: int
    flags: list[bool]
    verdict_counts: dict[str, int]

    @property
    def rate(self) -> float:
        return self.detections / self.trials if self.trials else 0.0

    def confidence_interval(self, z: float = 1.96) -> tuple[float, float]:
        """Wilson interval for the detection rate."""
        n, p = self.trials, self.rate
        if n == 0:
            return (0.0, 1.0)
        denom = 1 + z * z / n
        center = (p + z * z / (2 * n)) / denom
        half = z * ((p * (1 - p) / n + z * z / (4 * n * n)) ** 0.5) / denom
        return (max(0.0, center - half), min(1.0, center + half))


def _random_marks(rng: random.Random, contests: list[Contest]) -> dict:
    marks = {}
    for c in contests:
        names = list(c.candidates)
        if c.method == "irv":
            order = rng.sample(names, len(names))
            length = c.ranks if rng.random() < 0.8 else rng.randint(1, c.ranks)
            marks[c.contest_id] = order[:length]
        else:
            size = c.k if rng.random() < 0.8 else rng.randint(0, c.k)
            marks[c.contest_id] = sorted(rng.sample(names, size))
    return marks


def _swap_rows(printed: PrintedBallot, cell_contest_id: str, col_index: int,
               i: int, j: int) -> PrintedBallot:
    """Forge a printed ballot: swap the code (and its scratch partial) of two
    candidates in one column, as a misprinted encryption would."""
    rows = list(printed.rows)
    matching = [n for n, r in enumerate(rows) if r.cell_contest_id == cell_contest_id]
    na, nb = matching[i], matching[j]

    def swap(row_a: PrintedRow, row_b: PrintedRow):
        codes_a = list(row_a.codes)
        codes_b = list(row_b.codes)
        parts_a = list(row_a.partials)
        parts_b = list(row_b.partials)
        codes_a[col_index], codes_b[col_index] = codes_b[col_index], codes_a[col_index]
        parts_a[col_index], parts_b[col_index] = parts_b[col_index], parts_a[col_index]
        return (
            PrintedRow(row_a.cell_contest_id, row_a.candidate, tuple(codes_a), tuple(parts_a)),
            PrintedRow(row_b.cell_contest_id, row_b.candidate, tuple(codes_b), tuple(parts_b)),
        )

    rows[na], rows[nb] = swap(rows[na], rows[nb])
    return PrintedBallot(printed.form, printed.ballot_id, rows, printed.panels,
                         printed.signing_key_hex)


def _swap_selection(selections: dict, cell_contest_id: str, i: int = 0, j: int = 1) -> dict:
    out = {k: list(v) for k, v in selections.items()}
    out[cell_contest_id] = [j if x == i else (i if x == j else x)
                            for x in out[cell_contest_id]]
    return out


def _intent_results(contests: list[Contest], voters: list[SimVoter]
                    ) -> dict[str, ContestResult]:
    """Ground truth: what the counted marks should decode to."""
    out = {}
    for contest in contests:
        vectors = []
        for v in voters:
            if not v.returned or v.dropped:
                continue
            names = list(contest.candidates)
            value = v.marks.get(contest.contest_id, [])
            if contest.method == "irv":
                vec = [frozenset({names.index(value[r])}) if r < len(value) else frozenset()
                       for r in range(contest.ranks)]
            else:
                vec = [frozenset(names.index(x) for x in value)]
            vectors.append(vec)
        out[contest.contest_id] = run_method(contest, vectors)
    return out


def _results_match(expected: ContestResult, got: ContestResult) -> bool:
    if expected.result != got.result or expected.invalid != got.invalid:
        return False

    def key(entry):
        return "<invalid>" if entry is None else "|".join(entry)

    return sorted(map(key, expected.per_ballot)) == sorted(map(key, got.per_ballot))


class _Runner:
    def __init__(self, config: SimulationConfig, rng: random.Random):
        self.config = config
        self.rng = rng
        self.trng = lambda: rng.randbytes(32)
        strategy = dict(config.strategy)
        self.strategy = strategy.pop("name", "none")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        self.sparams = strategy
        self.authority = make_authority(
            "sim", config.scheme, config.contests, t=config.threshold,
            n=config.trustees, q=config.q, rng=rng, trng=self.trng,
            shortcode_bytes=config.shortcode_bytes,
            ballot_keypairs=config.ballot_keypairs,
            mix_rounds=config.mix_rounds,
        )
        self.manifest = self.authority.manifest
        self.first_cc = self.manifest.cell_contests()[0]
        self.voters = [
            SimVoter(
                voter_id=f"voter{i:04d}",
                marks=_random_marks(rng, config.contests),
                verifies=(i < round(config.voters * config.verify_fraction)),
            )
            for i in range(config.voters)
        ]
        self.challenge_reports = []
        self.victims = self._pick_victims()

    def _pick_victims(self) -> dict[int, dict]:
        count = int(self.sparams.get("count", 1)) if self.strategy != "none" else 0
        if self.strategy in ("none", "mix_tamper"):
            return {}
        victims = {}
        for i in range(min(count, len(self.voters))):
            info = {}
            # the adversary targets ballots that carry a first-contest vote,
            # and specifically the candidate whose cell the attack touches
            first = self.config.contests[0]
            if first.method == "irv":
                order = [c for c in first.candidates if c != first.candidates[0]]
                self.voters[i].marks[first.contest_id] = \
                    [first.candidates[0]] + order[:first.ranks - 1]
            else:
                self.voters[i].marks[first.contest_id] = [first.candidates[0]]
            if self.strategy == "forge_cell":
                policy = self.sparams.get("column", "random")
                if self.config.scheme == "safevote":
                    info["column"] = "-"
                elif policy == "random":
                    info["column"] = self.rng.choice("AB")
                else:
                    info["column"] = policy
                # victims of a print forgery always examine their ballots
                self.voters[i].verifies = True
            victims[i] = info
        return victims

    # -- per-scheme lifecycles ------------------------------------------------

    def run(self) -> ElectionOutcome:
        if self.config.scheme == "remotevote":
            self._run_paired(hybrid=False)
        elif self.config.scheme == "hybrid":
            self._run_paired(hybrid=True)
        else:
            self._run_safevote()
        self.authority.close_voting(
            [v.voter_id for v in self.voters if v.returned])
        tamper = self.config.contests[0].contest_id if self.strategy == "mix_tamper" else None
        results = self.authority.run_tally(self.rng, tamper_contest=tamper)
        report = verify_election(self.authority.board, self.manifest,
                                 self.authority.beacon)
        return self._outcome(results, report)

    def _run_paired(self, hybrid: bool) -> None:
        auth = self.authority
        serials = []
        for _ in self.voters:
            serials.append(auth.new_ballot().serial)
            serials.append(auth.new_ballot().serial)
        pairs = auth.make_pairs(serials)
        beacon = self.trng()
        auth.post_beacon(beacon)
        auth.spoil_pairs()

        for i, (voter, pair) in enumerate(zip(self.voters, pairs)):
            voter.ballot_id = pair.ballot_id
            printed = auth.print_ballot(pair_id=pair.ballot_id)
            victim = self.victims.get(i)
            if victim is not None and self.strategy == "forge_cell":
                voter.forged_column = victim["column"]
                col_index = 0 if victim["column"] == "A" else 1
                printed = _swap_rows(printed, self.first_cc.cell_contest_id,
                                     col_index, 0, 1)
                auth.printed[pair.ballot_id] = printed
            voter.printed = printed

        # voters who verify rebuild the spoiled column image and compare
        for voter in self.voters:
            if not voter.verifies:
                continue
            self._image_check(voter, beacon)

        # vote and return
        for i, voter in enumerate(self.voters):
            victim = self.victims.get(i)
            spoiled = select_spoil_column(beacon, voter.ballot_id)
            cast_column = "A" if spoiled == "B" else "B"
            scratch_challenge = (hybrid and i >= len(self.voters) - self.config.challengers)
            if scratch_challenge:
                self._hybrid_scratch_return(voter, cast_column)
                continue
            self._record_codes(voter, 0 if cast_column == "A" else 1)
            self._return_ballot(i, voter, cast_column=cast_column)

        self._post_return_checks()

    def _image_check(self, voter: SimVoter, beacon: bytes) -> None:
        try:
            image = reconstruct_partial_image(self.manifest, voter.ballot_id,
                                              self.authority.board)
        except (ForgeryEvidence, ProtocolError) as exc:
            voter.detections.append(f"partial image: {exc}")
            return
        col_index = 0 if image.column == "A" else 1
        for cc in self.manifest.cell_contests():
            for j, cand in enumerate(cc.candidates):
                printed_code = voter.printed.row(cc.cell_contest_id, cand).codes[col_index]
                if printed_code != image.codes[cc.cell_contest_id][cand]:
                    voter.detections.append(
                        f"image mismatch at {cc.cell_contest_id}/{cand}")

    def _hybrid_scratch_return(self, voter: SimVoter, cast_column: str) -> None:
        """Hybrid voter who scratches the live column, challenges offline,
        then casts anyway; both columns spoiled routes to duplication."""
        serial = self.authority.pairs[voter.ballot_id].serial(cast_column)
        r = self.authority.record(serial).r
        report = safevote.challenge(self.manifest, voter.printed, r, column=cast_column)
        self.challenge_reports.append(report)
        if not report.consistent:
            voter.detections.append("scratch challenge discrepant")
        self._record_codes(voter, 0 if cast_column == "A" else 1)
        safevote.process_return(
            self.authority, voter.ballot_id, voter.marks,
            ScratchState(intact=False, revealed_r=r), cast_column=cast_column)
        voter.returned = True

    def _run_safevote(self) -> None:
        auth = self.authority
        n = len(self.voters)
        challengers = set(range(n - self.config.challengers, n))
        scratchers = set(range(self.config.scratch_returns))
        grace_set = set(list(scratchers)[:self.config.grace_spoilers])

        for i, voter in enumerate(self.voters):
            ballot = auth.new_ballot()
            printed = auth.print_ballot(serial=ballot.serial)
            victim = self.victims.get(i)
            if victim is not None and self.strategy == "forge_cell":
                voter.forged_column = "-"
                printed = _swap_rows(printed, self.first_cc.cell_contest_id, 0, 0, 1)
                auth.printed[printed.ballot_id] = printed
            voter.ballot_id = printed.ballot_id
            voter.printed = printed

        for i, voter in enumerate(self.voters):
            victim = self.victims.get(i)
            altered = (self.strategy == "scratch_duplicate_alter" and victim is not None)

            if i in challengers or (victim is not None and self.strategy == "forge_cell"
                                    and voter.verifies):
                serial = auth.serials_for(voter.ballot_id)[0]
                r = auth.record(serial).r
                report = safevote.challenge(self.manifest, voter.printed, r)
                self.challenge_reports.append(report)
                if not report.consistent:
                    voter.detections.append("scratch challenge discrepant")
                replacement = safevote.issue_replacement(auth, serial)
                voter.printed = auth.print_ballot(serial=replacement.serial)
                voter.ballot_id = voter.printed.ballot_id
                voter.forged_column = None  # replacement printed honestly

            if altered:
                # the mail adversary scratches the panel and rewrites marks
                serial = auth.serials_for(voter.ballot_id)[0]
                tampered = dict(voter.marks)
                names = list(self.config.contests[0].candidates)
                original = tampered.get(self.config.contests[0].contest_id, [])
                tampered[self.config.contests[0].contest_id] = \
                    [names[1] if x == names[0] else names[0] for x in original] or [names[0]]
                self._record_codes(voter, 0)
                safevote.process_return(
                    auth, voter.ballot_id, tampered,
                    ScratchState(intact=False, revealed_r=auth.record(serial).r))
                voter.returned = True
                continue

            self._record_codes(voter, 0)
            if i in scratchers:
                serial = auth.serials_for(voter.ballot_id)[0]
                safevote.process_return(
                    auth, voter.ballot_id, voter.marks,
                    ScratchState(intact=False, revealed_r=auth.record(serial).r))
                voter.returned = True
                if i in grace_set:
                    self._grace_revote(voter)
                continue
            self._return_ballot(i, voter)

        self._post_return_checks()

    def _grace_revote(self, voter: SimVoter) -> None:
        auth = self.authority
        safevote.grace_spoil(auth, voter.ballot_id)
        serial = auth.serials_for(voter.ballot_id)[0]
        auth.record(serial).challenged = True
        replacement = auth.new_ballot(batch="replacement")
        printed = auth.print_ballot(serial=replacement.serial)
        auth.cast(printed.ballot_id, replacement.serial, voter.marks)

    def _record_codes(self, voter: SimVoter, col_index: int) -> None:
        """The voter writes down the codes printed beside their marks."""
        selections = expand_marks(self.manifest, voter.marks)
        recorded = {}
        for cc in self.manifest.cell_contests():
            codes = []
            for j in selections.get(cc.cell_contest_id, []):
                cand = cc.candidates[j]
                codes.append(voter.printed.row(cc.cell_contest_id, cand).codes[col_index])
            recorded[cc.cell_contest_id] = sorted(codes)
        voter.recorded_codes = recorded

    def _return_ballot(self, i: int, voter: SimVoter,
                       cast_column: str | None = None) -> None:
        auth = self.authority
        victim = self.victims.get(i)
        if self.strategy == "drop_ballots" and victim is not None:
            voter.returned = True
            voter.dropped = True  # returned but silently never processed
            return
        mutate = None
        if self.strategy == "forge_cell" and voter.forged_column == (cast_column or "-"):
            # the cast follows the printed layout, flipping the vote
            mutate = lambda sel: _swap_selection(sel, self.first_cc.cell_contest_id)
        if self.strategy == "wrong_receipt" and victim is not None:
            mutate = lambda sel: _swap_selection(sel, self.first_cc.cell_contest_id)
        serial = auth.cast_serial_for(voter.ballot_id, cast_column)
        auth.cast(voter.ballot_id, serial, voter.marks, mutate_selections=mutate)
        voter.returned = True

    def _post_return_checks(self) -> None:
        """Verifying voters compare receipts (and notice unexpected scratch
        posts); a misrepresented receipt escalates into a signed dispute."""
        auth = self.authority
        receipts = {p.body["ballot_id"]: p for p in
                    auth.board.of_kind("CastReceipt")}
        notices = {p.body["ballot_id"] for p in auth.board.of_kind("ScratchNotice")}
        for i, voter in enumerate(self.voters):
            if not voter.verifies or not voter.returned or voter.dropped:
                continue
            if self.strategy == "scratch_duplicate_alter" and i in self.victims:
                if voter.ballot_id in notices:
                    voter.detections.append("unexpected scratch notice")
                    self._grace_revote(voter)
                continue
            if voter.ballot_id in notices:
                continue  # duplication path: receipt suppressed by design
            receipt = receipts.get(voter.ballot_id)
            if receipt is None:
                continue
            mismatch = any(
                sorted(receipt.body["codes"].get(cid, [])) != codes
                for cid, codes in voter.recorded_codes.items()
            )
            if mismatch:
                voter.detections.append("receipt differs from recorded codes")
                self._file_dispute(voter, receipt.body["serial"])

    def _file_dispute(self, voter: SimVoter, serial: str) -> None:
        """Challenge with the scratch partial of the first actually marked
        candidate; the honest response then proves the misrepresentation."""
        auth = self.authority
        selections = expand_marks(self.manifest, voter.marks)
        cid = self.first_cc.cell_contest_id
        chosen = selections.get(cid, [])
        if not chosen:
            return
        cand = self.first_cc.candidates[chosen[0]]
        row = voter.printed.row(cid, cand)
        col_index = 0
        if voter.printed.form != FORM_SAFEVOTE:
            pair = auth.pairs[voter.ballot_id]
            col_index = 0 if pair.serial_a == serial else 1
        evidence = PartialEvidence(voter.ballot_id, serial, cid,
                                   row.codes[col_index], row.partials[col_index])
        signature = None
        vk = None
        if self.manifest.ballot_keypairs:
            secret = int(voter.printed.signing_key_hex, 16)
            signature = sign(self.manifest.group, secret, evidence.message())
            vk = self.manifest.group.exp(self.manifest.group.g1, secret)
        ch = file_challenge(auth.board, self.manifest.group, evidence, signature, vk)
        auth.respond_to_challenge(ch.body)

    # -- outcome ---------------------------------------------------------------

    def _outcome(self, results, report) -> ElectionOutcome:
        ignored = () if self.config.eligibility_check else ("eligibility",)
        verifier_failed = any(c not in ignored for c in report.failed_checks())
        voter_failed = any(v.detections for v in self.voters)
        voter_proven = any(v["verdict"] == VERDICT_VOTER_PROVEN
                           for v in report.data.get("dispute_verdicts", []))
        expected = _intent_results(self.config.contests, self.voters)
        ground_truth_ok = all(
            _results_match(expected[c.contest_id], results[c.contest_id])
            for c in self.config.contests
        )
        return ElectionOutcome(
            authority=self.authority,
            report=report,
            voters=self.voters,
            results=results,
            expected=expected,
            challenge_reports=self.challenge_reports,
            detected=verifier_failed or voter_failed or voter_proven,
            ground_truth_ok=ground_truth_ok,
            ignored_checks=ignored,
        )


def run_election(config: SimulationConfig, rng: random.Random | None = None) -> ElectionOutcome:
    """One full election lifecycle under the configured adversary."""
    if rng is None:
        rng = random.Random(config.seed)
    return _Runner(config, rng).run()


def trial_seed(seed: int, trial: int) -> int:
    return int.from_bytes(tagged_hash("rv/trial", int_be(seed), int_be(trial)), "big")


def simulate(config: SimulationConfig) -> SimulationResult:
    """Detection rate over independent trials; reproducible from the seed."""
    if config.trials < 1:
        raise ValueError("trials must be >= 1")
    flags = []
    verdict_counts: dict[str, int] = {}
    for trial in range(config.trials):
        outcome = run_election(config, random.Random(trial_seed(config.seed, trial)))
        flags.append(outcome.detected)
        for v in outcome.report.data.get("dispute_verdicts", []):
            verdict_counts[v["verdict"]] = verdict_counts.get(v["verdict"], 0) + 1
    return SimulationResult(config.trials, sum(flags), flags, verdict_counts)

"""Two-stage verifiable tally.

Stage one is per-ballot: the k cells a voter's choices occupy (selected
candidate cells plus abstention fill) are homomorphically added into a
single cell per contest, so every possible choice pattern is the sum of
exactly k cells and patterns are indistinguishable. Stage two anonymizes:
per contest, the aggregate cells run through a cut-and-choose verifiable
mix, are opened to their underlying encryptions, threshold-decrypted, and
the packed weights are exhaustively decoded in the clear. Because results
are computed on plaintext choice sets, any tallying method can run on top;
plurality counting and instant-runoff rounds are built in.

Ranked contests expand to one k=1 cell contest per rank position; their
aggregate cells travel through the mix as one vector per ballot under a
single permutation, which keeps each anonymous ballot's ranking intact.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from . import board as board_mod
from . import cce
from .algebra import GroupElement, GroupParams
from .ballot import ElectionManifest, EncryptedBallot
from .board import BoardLog
from .elgamal import DecryptionShare, ElgCiphertext, TrusteeShare, combine, partial_decrypt
from .encoding import tagged_hash
from .errors import InvalidVote, ProtocolError


class CastError(ProtocolError):
    pass


# ---------------------------------------------------------------------------
# cast records and receipts


@dataclass
class CastRecord:
    serial: str
    ballot_id: str
    selections: dict[str, list[int]]  # cell_contest_id -> candidate indices


def validate_marks(manifest: ElectionManifest, selections: dict[str, list[int]]) -> None:
    """Reject overvotes and malformed selections at intake."""
    known = {cc.cell_contest_id: cc for cc in manifest.cell_contests()}
    for cid, chosen in selections.items():
        cc = known.get(cid)
        if cc is None:
            raise CastError(f"unknown contest {cid!r}")
        if len(chosen) > cc.k:
            raise CastError(f"overvote in {cid!r}: {len(chosen)} selections, limit {cc.k}")
        if len(set(chosen)) != len(chosen):
            raise CastError(f"duplicate selection in {cid!r}")
        for j in chosen:
            if not 0 <= j < len(cc.candidates):
                raise CastError(f"no candidate index {j} in {cid!r}")


def receipt_body(manifest: ElectionManifest, ballot: EncryptedBallot,
                 ballot_id: str, selections: dict[str, list[int]]) -> dict:
    """CastReceipt body: ballot id plus the shortcode of each selected
    candidate, sorted within each contest so mark order leaks nothing."""
    codes = {}
    for cc in manifest.cell_contests():
        chosen = selections.get(cc.cell_contest_id, [])
        per = ballot.contest(cc.cell_contest_id)
        codes[cc.cell_contest_id] = sorted(per.shortcodes[j] for j in chosen)
    return {"ballot_id": ballot_id, "serial": ballot.serial, "codes": codes}


def expand_marks(manifest: ElectionManifest, marks: dict) -> dict[str, list[int]]:
    """Turn voter-level marks into per-cell-contest candidate indices.

    Plurality/approval contests map name lists directly; ranked contests map
    an ordered candidate list onto their rank sub-contests.
    """
    selections: dict[str, list[int]] = {}
    for contest in manifest.contests:
        value = marks.get(contest.contest_id, [])
        names = list(contest.candidates)
        if contest.method == "irv":
            if len(value) > contest.ranks:
                raise CastError(f"ranking longer than {contest.ranks} in {contest.contest_id!r}")
            if len(set(value)) != len(value):
                raise CastError(f"duplicate candidate in ranking for {contest.contest_id!r}")
            for r in range(contest.ranks):
                cid = f"{contest.contest_id}#r{r}"
                selections[cid] = [names.index(value[r])] if r < len(value) else []
        else:
            selections[contest.contest_id] = [names.index(v) for v in value]
    validate_marks(manifest, selections)
    return selections


# ---------------------------------------------------------------------------
# aggregation


def aggregate_contest(params: GroupParams, pk: GroupElement, cc_cells,
                      chosen: list[int], k: int) -> cce.CCECell:
    """Sum the k cells covering this contest: selected candidates plus
    abstention fill.

    Abstention cells are taken in the publication's canonical order (sorted
    by commitment encoding) so observers recompute the identical aggregate
    from the receipt and the publication alone.
    """
    n = cc_cells.n_candidates
    cells = [cc_cells.cells[j] for j in chosen]
    absts = sorted(cc_cells.cells[n:], key=lambda c: params.encode(c.commitment))
    cells += absts[:k - len(chosen)]
    acc = cells[0]
    for cell in cells[1:]:
        acc = cce.add(params, acc, cell)
    return acc


def aggregate_ballots(manifest: ElectionManifest,
                      casts: list[tuple[EncryptedBallot, CastRecord]]
                      ) -> dict[str, list[list[cce.CCECell]]]:
    """Per parent contest: one cell vector per cast ballot, ordered by serial.

    Vector length is 1 for plurality/approval and `ranks` for irv contests.
    """
    params = manifest.group
    casts = sorted(casts, key=lambda pair: pair[1].serial)
    out: dict[str, list[list[cce.CCECell]]] = {c.contest_id: [] for c in manifest.contests}
    groups = contest_components(manifest)
    for ballot, record in casts:
        for contest in manifest.contests:
            vector = []
            for cid in groups[contest.contest_id]:
                cc = manifest.cell_contest(cid)
                vector.append(aggregate_contest(
                    params, manifest.pk, ballot.contest(cid),
                    record.selections.get(cid, []), cc.k))
            out[contest.contest_id].append(vector)
    return out


def contest_components(manifest: ElectionManifest) -> dict[str, list[str]]:
    """Parent contest id -> ordered cell-contest ids forming its mix vector."""
    groups: dict[str, list[str]] = {}
    for cc in manifest.cell_contests():
        groups.setdefault(cc.base_id, []).append(cc.cell_contest_id)
    return groups


# ---------------------------------------------------------------------------
# valid packed-weight sets and decoding


def valid_packed_set(n_candidates: int, k: int) -> list[int]:
    """All packed values of choice sets with at most k of n candidates."""
    weights = [(k + 1) ** j for j in range(n_candidates)]
    values = set()
    for size in range(k + 1):
        for combo in combinations(range(n_candidates), size):
            values.add(sum(weights[j] for j in combo))
    return sorted(values)


def decode(m: int, n_candidates: int, k: int) -> frozenset[int] | None:
    """Unpack a base-(k+1) positional value into its choice set.

    Returns None for invalid values: any digit other than 0/1 (a double
    selection shows up as a digit 2), more than k ones, or overflow past the
    highest candidate position.
    """
    if m < 0:
        return None
    chosen = []
    base = k + 1
    for j in range(n_candidates):
        m, digit = divmod(m, base)
        if digit == 1:
            chosen.append(j)
        elif digit != 0:
            return None
    if m != 0 or len(chosen) > k:
        return None
    return frozenset(chosen)


# ---------------------------------------------------------------------------
# cut-and-choose verifiable mix

# The public transcript works on commitment columns only; aggregate
# ciphertexts stay authority-private until the post-mix opening, preserving
# the everlasting-privacy story (a future DL break must not link mix inputs
# to outputs). Each round commits an independent shuffle of the input; the
# Fiat-Shamir bit picks which linkage (input->round or round->output) is
# revealed, so a cheating mix survives a round with probability 1/2.


@dataclass
class MixRound:
    intermediate: list[list[GroupElement]]  # commitment vectors
    side: int  # 0: reveal input->intermediate, 1: intermediate->output
    perm: list[int]
    rands: list[list[int]]  # commitment randomizers, aligned with perm target


@dataclass
class MixProof:
    head: bytes  # board head the transcript is bound to
    rounds: list[MixRound]


def _column_bytes(params: GroupParams, column: list[list[GroupElement]]) -> bytes:
    return b"".join(params.encode(c) for vec in column for c in vec)


def mix_challenge_bits(params: GroupParams, head: bytes,
                       inputs: list[list[GroupElement]],
                       outputs: list[list[GroupElement]],
                       intermediates: list[list[list[GroupElement]]]) -> list[int]:
    digest = tagged_hash(
        "rv/mixchal", head,
        _column_bytes(params, inputs),
        _column_bytes(params, outputs),
        *[_column_bytes(params, col) for col in intermediates],
    )
    bits = []
    for i in range(len(intermediates)):
        bits.append((digest[(i // 8) % len(digest)] >> (i % 8)) & 1)
        if i and i % 256 == 255:  # extend for absurdly large round counts
            digest = tagged_hash("rv/mixchal", digest)
    return bits


def mix(manifest: ElectionManifest, vectors: list[list[cce.CCECell]], rng,
        head: bytes, rounds: int) -> tuple[list[list[cce.CCECell]], MixProof]:
    """Shuffle and re-randomize cell vectors; emit the cut-and-choose proof.

    Soundness error 2^-rounds. Requires at least two vectors; a singleton
    mix anonymizes nothing.
    """
    if len(vectors) < 2:
        raise ProtocolError("mixing needs at least 2 cell vectors")
    params = manifest.group
    n = len(vectors)
    dims = len(vectors[0])
    if any(len(v) != dims for v in vectors):
        raise ProtocolError("all mix vectors must have the same length")

    perm = list(range(n))
    rng.shuffle(perm)
    out_s = [[params.random_scalar(rng) for _ in range(dims)] for _ in range(n)]
    out_r = [[params.random_scalar(rng) for _ in range(dims)] for _ in range(n)]
    outputs = [
        [cce.rerandomize(params, manifest.pk, vectors[perm[j]][d], out_s[j][d], out_r[j][d])
         for d in range(dims)]
        for j in range(n)
    ]

    drafts = []
    for _ in range(rounds):
        sigma = list(range(n))
        rng.shuffle(sigma)
        a = [[params.random_scalar(rng) for _ in range(dims)] for _ in range(n)]
        inter = [
            [cce.rerandomize_commitment(params, vectors[sigma[i]][d].commitment, a[i][d])
             for d in range(dims)]
            for i in range(n)
        ]
        drafts.append((sigma, a, inter))

    in_comms = [[c.commitment for c in vec] for vec in vectors]
    out_comms = [[c.commitment for c in vec] for vec in outputs]
    bits = mix_challenge_bits(params, head, in_comms, out_comms,
                              [d[2] for d in drafts])

    proof_rounds = []
    for bit, (sigma, a, inter) in zip(bits, drafts):
        if bit == 0:
            proof_rounds.append(MixRound(inter, 0, sigma, a))
        else:
            # intermediate -> output: output j rerandomizes intermediate
            # position sigma^-1(perm(j)) by the randomizer difference.
            sigma_inv = [0] * n
            for i, tgt in enumerate(sigma):
                sigma_inv[tgt] = i
            mu = [sigma_inv[perm[j]] for j in range(n)]
            deltas = [
                [(out_s[j][d] - a[mu[j]][d]) % params.q for d in range(dims)]
                for j in range(n)
            ]
            proof_rounds.append(MixRound(inter, 1, mu, deltas))
    return outputs, MixProof(head, proof_rounds)


def verify_mix(params: GroupParams, inputs: list[list[GroupElement]],
               outputs: list[list[GroupElement]], proof: MixProof) -> int | None:
    """Recompute the challenge and check every revealed linkage.

    Returns None on accept, or the first failing round index. Structural
    defects (wrong counts, non-permutations) report as round failures too.
    """
    n = len(inputs)
    if n == 0 or len(outputs) != n:
        return 0
    dims = len(inputs[0])
    if any(len(v) != dims for v in inputs + outputs):
        return 0
    bits = mix_challenge_bits(params, proof.head, inputs, outputs,
                              [r.intermediate for r in proof.rounds])
    for idx, (bit, rnd) in enumerate(zip(bits, proof.rounds)):
        if rnd.side != bit:
            return idx
        if sorted(rnd.perm) != list(range(n)):
            return idx
        if len(rnd.intermediate) != n or any(len(v) != dims for v in rnd.intermediate):
            return idx
        if len(rnd.rands) != n or any(len(v) != dims for v in rnd.rands):
            return idx
        if bit == 0:
            src, dst = inputs, rnd.intermediate
            # dst[i] should equal src[perm[i]] blinded by rands[i]
            for i in range(n):
                for d in range(dims):
                    expect = cce.rerandomize_commitment(params, src[rnd.perm[i]][d],
                                                        rnd.rands[i][d])
                    if dst[i][d] != expect:
                        return idx
        else:
            for j in range(n):
                for d in range(dims):
                    expect = cce.rerandomize_commitment(
                        params, rnd.intermediate[rnd.perm[j]][d], rnd.rands[j][d])
                    if outputs[j][d] != expect:
                        return idx
    return None


def mix_record_body(params: GroupParams, contest_id: str,
                    inputs: list[list[GroupElement]],
                    outputs: list[list[GroupElement]], proof: MixProof) -> dict:
    enc = params.encode_hex
    return {
        "contest_id": contest_id,
        "head": proof.head.hex(),
        "input": [[enc(c) for c in vec] for vec in inputs],
        "output": [[enc(c) for c in vec] for vec in outputs],
        "rounds": [
            {
                "intermediate": [[enc(c) for c in vec] for vec in r.intermediate],
                "side": r.side,
                "perm": list(r.perm),
                "rands": [[format(x, "x") for x in vec] for vec in r.rands],
            }
            for r in proof.rounds
        ],
    }


def mix_proof_from_body(params: GroupParams, body: dict
                        ) -> tuple[list[list[GroupElement]], list[list[GroupElement]], MixProof]:
    dec = params.decode_hex
    inputs = [[dec(c) for c in vec] for vec in body["input"]]
    outputs = [[dec(c) for c in vec] for vec in body["output"]]
    rounds = [
        MixRound(
            [[dec(c) for c in vec] for vec in r["intermediate"]],
            r["side"],
            list(r["perm"]),
            [[int(x, 16) for x in vec] for vec in r["rands"]],
        )
        for r in body["rounds"]
    ]
    return inputs, outputs, MixProof(bytes.fromhex(body["head"]), rounds)


# ---------------------------------------------------------------------------
# opening: threshold decryption plus exhaustive pairing search


def decrypt_to_shares(params: GroupParams, trustees: list[TrusteeShare],
                      ct: ElgCiphertext, t: int) -> list[DecryptionShare]:
    return [partial_decrypt(params, tr, ct) for tr in trustees[:t]]


def open_mixed_cell(params: GroupParams, commitment: GroupElement,
                    ct: ElgCiphertext, shares: list[DecryptionShare],
                    public_commits: dict[int, GroupElement], t: int,
                    valid_set) -> int | None:
    """Public opening of one mixed cell: combine shares, pairing-search m.

    Returns the decoded weight, or None when the cell is an invalid vote
    (flagged and excluded; it can affect at most its own ballot).
    """
    s_elem = combine(params, ct, shares, public_commits, t)
    try:
        return cce.open_value(params, commitment, s_elem, valid_set).m
    except InvalidVote:
        return None


# ---------------------------------------------------------------------------
# tally methods


@dataclass
class ContestResult:
    contest_id: str
    method: str
    per_ballot: list  # choice sets (sorted lists) or rankings, mixed order
    invalid: int
    result: dict

    def to_dict(self) -> dict:
        return {
            "contest_id": self.contest_id,
            "method": self.method,
            "per_ballot": self.per_ballot,
            "invalid": self.invalid,
            "result": self.result,
        }


def plurality_result(contest, choice_sets: list[frozenset[int] | None]) -> ContestResult:
    counts = {name: 0 for name in contest.candidates}
    invalid = 0
    per_ballot = []
    for s in choice_sets:
        if s is None:
            invalid += 1
            per_ballot.append(None)
            continue
        per_ballot.append(sorted(contest.candidates[j] for j in s))
        for j in s:
            counts[contest.candidates[j]] += 1
    winners = []
    if counts and any(v > 0 for v in counts.values()):
        top = max(counts.values())
        winners = sorted(n for n, v in counts.items() if v == top)
    return ContestResult(contest.contest_id, contest.method, per_ballot, invalid,
                         {"counts": counts, "winners": winners})


def assemble_ranking(contest, rank_sets: list[frozenset[int] | None]) -> list[int]:
    """Collapse per-rank choice sets into a ranking; duplicates keep their
    first (highest) position, empty or invalid ranks are skipped."""
    ranking = []
    for s in rank_sets:
        if s is None or not s:
            continue
        (j,) = s
        if j not in ranking:
            ranking.append(j)
    return ranking


def irv_result(contest, rankings: list[list[int]], invalid: int = 0) -> ContestResult:
    """Sequential elimination; ties eliminate the lowest candidate index.

    A ballot counts for its highest-ranked continuing candidate; exhausted
    ballots leave the continuing total. Winner declared on a strict majority
    of continuing ballots or as the last candidate standing.
    """
    names = list(contest.candidates)
    active = set(range(len(names)))
    rounds = []
    winner = None
    if not rankings:
        return ContestResult(contest.contest_id, "irv", [], invalid,
                             {"rounds": [], "winner": None})
    while active:
        counts = {j: 0 for j in sorted(active)}
        continuing = 0
        for ranking in rankings:
            for j in ranking:
                if j in active:
                    counts[j] += 1
                    continuing += 1
                    break
        record = {"counts": {names[j]: counts[j] for j in sorted(active)}}
        if len(active) == 1:
            winner = names[next(iter(active))]
            record["winner"] = winner
            rounds.append(record)
            break
        leader = max(counts, key=lambda j: counts[j])
        if continuing and counts[leader] * 2 > continuing:
            winner = names[leader]
            record["winner"] = winner
            rounds.append(record)
            break
        fewest = min(counts.values())
        eliminated = min(j for j in counts if counts[j] == fewest)
        active.remove(eliminated)
        record["eliminated"] = names[eliminated]
        rounds.append(record)
    per_ballot = [[names[j] for j in ranking] for ranking in rankings]
    return ContestResult(contest.contest_id, "irv", per_ballot, invalid,
                         {"rounds": rounds, "winner": winner})


def run_method(contest, decoded_vectors: list[list[frozenset[int] | None]]) -> ContestResult:
    """Tally one contest from its decoded, anonymized cell vectors."""
    if contest.method == "irv":
        rankings = []
        invalid = 0
        for vec in decoded_vectors:
            if any(s is None for s in vec):
                invalid += 1
            rankings.append(assemble_ranking(contest, vec))
        return irv_result(contest, rankings, invalid)
    return plurality_result(contest, [vec[0] for vec in decoded_vectors])

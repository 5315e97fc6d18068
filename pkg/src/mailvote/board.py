"""Append-only, hash-chained public bulletin board.

One post per line on disk, canonical JSON with lexicographically ordered
keys and hex for bytes. The hash preimage of a post is its serialized line
minus the post_hash field, so any implementation can re-verify the chain
byte for byte. Truncation at the tail is undetectable by the chain alone;
the verifier's count checks cover that.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .encoding import ZERO_DIGEST, canonical_json, tagged_hash
from .errors import ProtocolError

KIND_BALLOT_PUBLICATION = "BallotPublication"
KIND_PAIR_RECORD = "PairRecord"
KIND_BEACON_RECORD = "BeaconRecord"
KIND_SPOIL_REVEAL = "SpoilReveal"
KIND_CAST_RECEIPT = "CastReceipt"
KIND_SCRATCH_NOTICE = "ScratchNotice"
KIND_DISCLAIMER = "Disclaimer"
KIND_MIX_RECORD = "MixRecord"
KIND_OPENING_RECORD = "OpeningRecord"
KIND_DECRYPTION_RECORD = "DecryptionRecord"
KIND_TALLY_RECORD = "TallyRecord"
KIND_VOTER_LIST_RECORD = "VoterListRecord"
KIND_CHALLENGE_RECORD = "ChallengeRecord"
KIND_RESPONSE_RECORD = "ResponseRecord"

POST_KINDS = frozenset({
    KIND_BALLOT_PUBLICATION, KIND_PAIR_RECORD, KIND_BEACON_RECORD,
    KIND_SPOIL_REVEAL, KIND_CAST_RECEIPT, KIND_SCRATCH_NOTICE, KIND_DISCLAIMER,
    KIND_MIX_RECORD, KIND_OPENING_RECORD, KIND_DECRYPTION_RECORD,
    KIND_TALLY_RECORD, KIND_VOTER_LIST_RECORD, KIND_CHALLENGE_RECORD,
    KIND_RESPONSE_RECORD,
})


class NonCanonicalBody(ProtocolError):
    pass


@dataclass(frozen=True)
class BulletinPost:
    seq: int
    prev_hash: bytes
    kind: str
    body: dict
    post_hash: bytes

    def line(self) -> str:
        return canonical_json({
            "seq": self.seq,
            "prev_hash": self.prev_hash.hex(),
            "kind": self.kind,
            "body": self.body,
            "post_hash": self.post_hash.hex(),
        })


def post_digest(seq: int, prev_hash: bytes, kind: str, body: dict) -> bytes:
    preimage = canonical_json({
        "seq": seq,
        "prev_hash": prev_hash.hex(),
        "kind": kind,
        "body": body,
    })
    return tagged_hash("rv/post", preimage.encode())


def _check_body(kind: str, body: dict) -> dict:
    if kind not in POST_KINDS:
        raise NonCanonicalBody(f"unknown post kind {kind!r}")
    if not isinstance(body, dict):
        raise NonCanonicalBody("post body must be a JSON object")
    try:
        text = canonical_json(body)
    except ValueError as exc:
        raise NonCanonicalBody(str(exc)) from exc
    # round-trip to strip any non-canonical structure (tuples, int-like keys)
    return json.loads(text)


class BoardLog:
    """The public record: strictly appended, never mutated or reordered."""

    def __init__(self, posts: list[BulletinPost] | None = None):
        self.posts: list[BulletinPost] = posts or []

    def __len__(self) -> int:
        return len(self.posts)

    def __iter__(self):
        return iter(self.posts)

    @property
    def head_hash(self) -> bytes:
        return self.posts[-1].post_hash if self.posts else ZERO_DIGEST

    @property
    def next_seq(self) -> int:
        return len(self.posts)

    def append(self, kind: str, body: dict) -> BulletinPost:
        body = _check_body(kind, body)
        seq = self.next_seq
        prev = self.head_hash
        post = BulletinPost(seq, prev, kind, body, post_digest(seq, prev, kind, body))
        self.posts.append(post)
        return post

    def of_kind(self, kind: str) -> list[BulletinPost]:
        return [p for p in self.posts if p.kind == kind]

    def first_of_kind(self, kind: str) -> BulletinPost | None:
        for p in self.posts:
            if p.kind == kind:
                return p
        return None

    def save(self, path) -> None:
        Path(path).write_text("".join(p.line() + "\n" for p in self.posts))

    @classmethod
    def load(cls, path) -> "BoardLog":
        posts = []
        for line in Path(path).read_text().splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            posts.append(BulletinPost(
                seq=d["seq"],
                prev_hash=bytes.fromhex(d["prev_hash"]),
                kind=d["kind"],
                body=d["body"],
                post_hash=bytes.fromhex(d["post_hash"]),
            ))
        return cls(posts)


def verify_chain(log: BoardLog) -> int | None:
    """Recompute every post hash and linkage. None if sound, else first bad seq."""
    prev = ZERO_DIGEST
    for i, post in enumerate(log.posts):
        ok = (
            post.seq == i
            and post.prev_hash == prev
            and post.kind in POST_KINDS
            and post.post_hash == post_digest(post.seq, post.prev_hash, post.kind, post.body)
        )
        if not ok:
            return i
        prev = post.post_hash
    return None

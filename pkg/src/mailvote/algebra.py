"""Prime-order bilinear group triple (G1, G2, GT) with a transparent backend.

The transparent backend represents every element by its discrete log modulo
the group order q, so group multiplication is addition mod q and the pairing
is multiplication of discrete logs. It is deliberately insecure; its value is
that every algebraic identity in the protocol can be checked exactly, at desk
scale, including oracles that a real pairing group would make infeasible
(alternate commitment openings, dlog-product pairing checks).

A production pairing-curve backend can be added behind the same interface;
nothing outside this module assumes dlogs are visible except the explicitly
oracle-only helpers (`dlog`, and `cce.alternate_opening` built on it).

Scalars are plain Python ints in [0, q).
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass

from .encoding import int_be, tagged_hash
from .errors import GroupError

G1 = "G1"
G2 = "G2"
GT = "GT"
GROUPS = (G1, G2, GT)

TRANSPARENT = "transparent"

# Default order: the Mersenne prime 2^61 - 1. Large enough that hash-derived
# scalars never collide in practice, small enough that everything is cheap.
DEFAULT_Q = 2**61 - 1

# Encoding tag byte: high nibble identifies the backend, low nibble the group.
_GROUP_TAG = {G1: 0x11, G2: 0x12, GT: 0x13}
_TAG_GROUP = {v: k for k, v in _GROUP_TAG.items()}


@dataclass(frozen=True)
class GroupElement:
    """An element of G1, G2, or GT; `value` is its dlog in the transparent backend."""

    group: str
    value: int


@dataclass(frozen=True)
class GroupParams:
    """Group order, generators, and backend id.

    In the transparent backend h2's discrete log base g2 is simply its value;
    it is readable by design and used only by test oracles and
    `alternate_opening`.
    """

    q: int
    h2_dlog: int
    backend: str = TRANSPARENT

    def __post_init__(self):
        if self.q < 3:
            raise GroupError("group order must be an odd prime >= 3")
        if not 0 < self.h2_dlog < self.q:
            raise GroupError("h2 must not be the identity")

    # -- basic elements -------------------------------------------------

    @property
    def g1(self) -> GroupElement:
        return GroupElement(G1, 1)

    @property
    def g2(self) -> GroupElement:
        return GroupElement(G2, 1)

    @property
    def h2(self) -> GroupElement:
        return GroupElement(G2, self.h2_dlog)

    def identity(self, group: str) -> GroupElement:
        self._check_group(group)
        return GroupElement(group, 0)

    def element(self, group: str, dlog: int) -> GroupElement:
        self._check_group(group)
        return GroupElement(group, dlog % self.q)

    # -- group operations ------------------------------------------------

    def mul(self, a: GroupElement, b: GroupElement) -> GroupElement:
        if a.group != b.group:
            raise GroupError(f"cannot multiply {a.group} by {b.group}")
        self._check_backend()
        return GroupElement(a.group, (a.value + b.value) % self.q)

    def inv(self, a: GroupElement) -> GroupElement:
        self._check_backend()
        return GroupElement(a.group, (-a.value) % self.q)

    def div(self, a: GroupElement, b: GroupElement) -> GroupElement:
        return self.mul(a, self.inv(b))

    def exp(self, base: GroupElement, e: int) -> GroupElement:
        self._check_backend()
        return GroupElement(base.group, (base.value * (e % self.q)) % self.q)

    def pairing(self, a: GroupElement, b: GroupElement) -> GroupElement:
        if a.group != G1 or b.group != G2:
            raise GroupError(f"pairing needs (G1, G2), got ({a.group}, {b.group})")
        self._check_backend()
        return GroupElement(GT, (a.value * b.value) % self.q)

    # -- encoding ---------------------------------------------------------

    @property
    def value_width(self) -> int:
        return (self.q.bit_length() + 7) // 8

    def encode(self, elem: GroupElement) -> bytes:
        self._check_group(elem.group)
        if not 0 <= elem.value < self.q:
            raise GroupError("element value out of range")
        return bytes([_GROUP_TAG[elem.group]]) + elem.value.to_bytes(self.value_width, "big")

    def decode(self, data: bytes) -> GroupElement:
        if len(data) != 1 + self.value_width:
            raise GroupError(f"bad element encoding length {len(data)}")
        group = _TAG_GROUP.get(data[0])
        if group is None:
            raise GroupError(f"unknown element tag byte {data[0]:#x}")
        value = int.from_bytes(data[1:], "big")
        if value >= self.q:
            raise GroupError("decoded element value out of range")
        return GroupElement(group, value)

    def encode_hex(self, elem: GroupElement) -> str:
        return self.encode(elem).hex()

    def decode_hex(self, text: str) -> GroupElement:
        return self.decode(bytes.fromhex(text))

    def scalar_bytes(self, s: int) -> bytes:
        return (s % self.q).to_bytes(self.value_width, "big")

    # -- scalars and randomness -------------------------------------------

    def hash_scalar(self, tag: str, *parts: bytes) -> int:
        """Deterministic scalar in [0, q) from a domain-tagged hash."""
        return int.from_bytes(tagged_hash(tag, *parts), "big") % self.q

    def random_scalar(self, rng=None) -> int:
        if rng is None:
            return secrets.randbelow(self.q)
        return rng.randrange(self.q)

    def random_element(self, group: str, rng=None) -> GroupElement:
        return self.element(group, self.random_scalar(rng))

    def dlog(self, elem: GroupElement) -> int:
        """Transparent-backend oracle: the element's discrete log."""
        self._check_backend()
        return elem.value

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "backend": self.backend,
            "q": format(self.q, "x"),
            "g1": self.encode_hex(self.g1),
            "g2": self.encode_hex(self.g2),
            "h2": self.encode_hex(self.h2),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroupParams":
        if d["backend"] != TRANSPARENT:
            raise GroupError(f"unsupported backend {d['backend']!r}")
        q = int(d["q"], 16)
        h2 = bytes.fromhex(d["h2"])
        return cls(q=q, h2_dlog=int.from_bytes(h2[1:], "big"), backend=d["backend"])

    # -- internals ----------------------------------------------------------

    def _check_group(self, group: str) -> None:
        if group not in GROUPS:
            raise GroupError(f"unknown group {group!r}")

    def _check_backend(self) -> None:
        if self.backend != TRANSPARENT:
            raise GroupError(f"backend {self.backend!r} has no arithmetic implementation")


def setup(q: int = DEFAULT_Q, h2_dlog: int | None = None, rng=None) -> GroupParams:
    """Create group parameters, drawing h2 at random unless pinned."""
    if h2_dlog is None:
        h2_dlog = 1 + (secrets.randbelow(q - 1) if rng is None else rng.randrange(q - 1))
    return GroupParams(q=q, h2_dlog=h2_dlog)

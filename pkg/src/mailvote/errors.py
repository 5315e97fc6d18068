"""Shared exception types."""


class ProtocolError(Exception):
    """Base class for all protocol-rule violations raised by this package."""


class GroupError(ProtocolError):
    """Group mismatch, bad encoding, or unsupported backend operation."""


class ShareError(ProtocolError):
    """Threshold-decryption share problem; carries the offending index when known."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class InvalidVote(ProtocolError):
    """An opened cell matched no admissible vote weight."""


class TamperedPayload(ProtocolError):
    """QR payload failed its integrity tag."""


class ForgeryEvidence(ProtocolError):
    """Revealed secrets are inconsistent with the published commitments.

    The mismatch details are attached so a voter report can localize the
    forged rows.
    """

    def __init__(self, message: str, details: list | None = None):
        super().__init__(message)
        self.details = details or []

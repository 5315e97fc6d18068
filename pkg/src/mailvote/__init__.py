"""End-to-end verifiable vote-by-mail protocols at desk scale.

Implements the RemoteVote and SAFE Vote ballot flows and their hybrid: code
committed encrypted ballots published in advance, a hash-chained bulletin
board, beacon or scratch-off ballot audits, a two-stage verifiable tally
(per-ballot homomorphic aggregation, cut-and-choose mix, commitment opening
with threshold decryption), dispute resolution extensions, a universal
verifier, and a Monte Carlo adversary simulator.
"""

__version__ = "0.1.0"

from .algebra import DEFAULT_Q, G1, G2, GT, GroupElement, GroupParams, setup
from .ballot import Contest, ElectionManifest, EncryptedBallot, PrintedBallot
from .board import BoardLog, verify_chain
from .errors import (
    ForgeryEvidence,
    GroupError,
    InvalidVote,
    ProtocolError,
    ShareError,
    TamperedPayload,
)

__all__ = [
    "DEFAULT_Q", "G1", "G2", "GT", "GroupElement", "GroupParams", "setup",
    "Contest", "ElectionManifest", "EncryptedBallot", "PrintedBallot",
    "BoardLog", "verify_chain",
    "ForgeryEvidence", "GroupError", "InvalidVote", "ProtocolError",
    "ShareError", "TamperedPayload",
]

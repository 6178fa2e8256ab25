"""Error codes shared between chaincode, transaction flow, and gateway."""

from __future__ import annotations

# Structured chaincode error codes. The gateway maps these onto HTTP
# statuses; they also travel through endorsement rejections.
ACCESS_DENIED = "access-denied"
NOT_FOUND = "not-found"
ALREADY_EXISTS = "already-exists"
AUTH_FAILED = "auth-failed"
VALIDATION = "validation"


class ChaincodeError(Exception):
    """Business-logic denial raised during chaincode execution."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class SelectorError(ValueError):
    """Malformed rich-query selector."""


class EndorsementRejected(Exception):
    """Proposal refused before ordering.

    ``kind`` is "chaincode" when the contract denied the call (the
    original code/message are preserved) and "identity" when the creator
    failed membership checks.
    """

    def __init__(self, kind: str, code: str, message: str):
        super().__init__(message)
        self.kind = kind
        self.code = code
        self.message = message


class QueueFullError(Exception):
    """Ordering queue at capacity and the submitter asked not to block."""

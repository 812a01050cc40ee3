"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`MMSummError`
and carries a short machine-readable ``code`` used in CLI/report output.
"""

from __future__ import annotations


class MMSummError(Exception):
    code = "Error"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = context

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": str(self)}
        out.update({k: v for k, v in self.context.items() if v is not None})
        return out


class ValidationError(MMSummError, ValueError):
    """Bad input: caller-side contract violation."""

    code = "ValidationError"


class RuntimeFailure(MMSummError, RuntimeError):
    """Failure while computing on otherwise valid input."""

    code = "RuntimeFailure"


# -- shapes and values ------------------------------------------------------


class DimensionMismatch(ValidationError):
    code = "DimensionMismatch"


class ShapeMismatch(ValidationError):
    code = "ShapeMismatch"


class LengthMismatch(ValidationError):
    code = "LengthMismatch"


class ZeroNormVector(ValidationError):
    code = "ZeroNormVector"


class NonFinite(ValidationError):
    code = "NonFinite"


class InvalidWeights(ValidationError):
    code = "InvalidWeights"


class WeightsNotNormalized(ValidationError):
    code = "WeightsNotNormalized"


class IndexOutOfRange(ValidationError):
    code = "IndexOutOfRange"


class EmptyWindow(ValidationError):
    code = "EmptyWindow"


class EmptyInput(ValidationError):
    code = "EmptyInput"


class InvalidPolicy(ValidationError):
    code = "InvalidPolicy"


class KTooLarge(ValidationError):
    code = "KTooLarge"


class KExceedsN(ValidationError):
    code = "KExceedsN"


class TooLarge(ValidationError):
    code = "TooLarge"


class EmptyReference(ValidationError):
    code = "EmptyReference"


class NoRelevantItems(ValidationError):
    code = "NoRelevantItems"


class MissingCandidates(ValidationError):
    code = "MissingCandidates"


class MissingModality(ValidationError):
    code = "MissingModality"


# -- numerics ---------------------------------------------------------------


class NumericUnderflow(RuntimeFailure):
    code = "NumericUnderflow"


class SolverError(RuntimeFailure):
    """A solver failure re-raised with the (i, j) cell it happened in."""

    code = "SolverError"


# -- embedding files --------------------------------------------------------


class EmbeddingFormatError(ValidationError):
    code = "EmbeddingFormatError"


class BadMagic(EmbeddingFormatError):
    code = "BadMagic"


class TruncatedPayload(EmbeddingFormatError):
    code = "TruncatedPayload"


class TrailingData(EmbeddingFormatError):
    code = "TrailingData"


class VersionUnsupported(EmbeddingFormatError):
    code = "VersionUnsupported"


# -- manifest ---------------------------------------------------------------


class ManifestError(ValidationError):
    """All manifest violations found in one validation pass."""

    code = "ManifestError"

    def __init__(self, issues: list[dict]):
        self.issues = list(issues)
        lines = "; ".join(f"{i['code']}: {i['message']}" for i in self.issues)
        super().__init__(f"{len(self.issues)} manifest issue(s): {lines}")

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), "issues": self.issues}


# -- abstractive adapter ----------------------------------------------------


class AdapterUnavailable(RuntimeFailure):
    code = "AdapterUnavailable"


class AdapterProtocolError(RuntimeFailure):
    code = "AdapterProtocolError"

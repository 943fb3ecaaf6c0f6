"""Exception hierarchy shared across the workbench."""


class IlrkitError(Exception):
    """Base class for all workbench errors."""


class ZeroVectorError(IlrkitError):
    """Vector norm too small to normalize."""


class NonFiniteError(IlrkitError):
    """Input contains NaN or Inf."""


class DimensionMismatchError(IlrkitError):
    """Descriptor dimensions differ where they must agree."""


class LengthMismatchError(IlrkitError):
    """Paired sequences differ in length."""


class EmptyInputError(IlrkitError):
    """An operation that needs at least one element got none."""


class UnknownIdError(IlrkitError):
    """A judgment references an image id absent from the database."""


class JudgmentError(IlrkitError):
    """A relevance judgment violates its invariants."""


class QuerySetMismatchError(IlrkitError):
    """Two per-query reports cover different query sets."""


class NoPositiveError(IlrkitError):
    """Label vector contains no positive entry."""


class NoNegativeError(IlrkitError):
    """Label vector contains no negative entry."""


class EmptyNegativesError(IlrkitError):
    """Contrastive mining needs at least one candidate negative."""


class IndexOutOfRangeError(IlrkitError):
    """Class index outside the classifier weight rows."""


class TooFewClassesError(IlrkitError):
    """Epoch planning needs at least two instance classes."""


class FormatError(IlrkitError):
    """A serialized artifact does not match its declared format."""


class MissingImageError(IlrkitError):
    """A manifest references an image absent from the content store."""


class NonFiniteLossError(IlrkitError):
    """Training produced a NaN/Inf loss; carries the failing step index."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class DecodeError(IlrkitError):
    """Image bytes could not be decoded."""


class TooSmallError(IlrkitError):
    """Image below the minimum resolution for featurization."""


class ClientError(IlrkitError):
    """A generation-stage client failed; carries the stage tag."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class TooFewCategoriesError(IlrkitError):
    """Category client delivered less than 90% of the requested names."""


class DegenerateMaskError(IlrkitError):
    """Background removal produced an implausible alpha coverage."""


class GenerationFailedError(IlrkitError):
    """More than the tolerated fraction of classes failed to generate."""


class ConfigError(IlrkitError):
    """Run configuration is malformed (unknown or invalid keys)."""

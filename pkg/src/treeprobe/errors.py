"""Exception types shared across the package."""


class TreeprobeError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(TreeprobeError):
    """Caller passed a value outside an operation's domain (empty, unsorted, ...)."""


class ShapeError(TreeprobeError):
    """Array dimensions or sequence lengths do not line up."""


class ConstraintError(TreeprobeError):
    """An integer sequence violates the tree-depth constraints."""


class OracleCapError(TreeprobeError):
    """Exact enumeration was requested above the configured length cap."""


class MissingLabelsError(TreeprobeError):
    """Supervised operation invoked on a corpus without depth annotations."""


class MissingAlignmentError(TreeprobeError):
    """Word-level measurement mode requested without sub-token alignment."""


class DomainError(TreeprobeError):
    """A mathematical hypothesis of the operation does not hold for the input."""


class SingularityError(TreeprobeError):
    """A planted projection matrix is rank deficient."""


class InvariantError(TreeprobeError):
    """A documented invariant between computed quantities was violated."""


class FormatError(TreeprobeError):
    """A file does not conform to its declared binary or text format."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CycleError(FormatError):
    """Head annotations contain a cycle."""


class AmbiguityError(FormatError):
    """Head annotations do not define exactly one root."""

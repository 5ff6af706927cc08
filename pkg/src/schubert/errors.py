"""Exception types shared across the pipeline."""


class SchubertError(Exception):
    """Base class for all pipeline errors."""


class MalformedLine(SchubertError):
    """A dump line is not a well-formed JSON object or lacks a usable id."""


class StorageFailure(SchubertError):
    """The article store could not be written or opened."""


class ParseFailure(SchubertError):
    """An input document is not parseable HTML."""


class InvalidInput(SchubertError):
    """An argument violates an operation's preconditions."""


class FormatError(SchubertError):
    """A binary file is corrupt or has an unsupported layout.

    `offset` is the byte position at which decoding failed.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class MissingYear(SchubertError):
    """A resolved article has no publication year, so it cannot be labeled."""


class DegenerateLabels(SchubertError):
    """All labels in an evaluation set are equal; R^2 is undefined."""

"""Exception types shared across the package."""


class PViewError(Exception):
    """Base class for all errors raised by this package."""


class DataError(PViewError):
    """Invalid input data, schema, or view file content."""


class DomainTooLargeError(DataError):
    """A dense materialization was requested over a domain that exceeds the
    configured cell limit."""


class FormatError(DataError):
    """A serialized view could not be read."""


class VersionMismatchError(FormatError):
    """The file declares a format version this reader does not understand."""


class SchemaHashMismatchError(FormatError):
    """The embedded schema does not match its recorded digest."""


class MalformedRecordError(FormatError):
    """The byte stream is truncated or structurally invalid."""


class AtomicBlockError(PViewError):
    """A cut was requested on a block with no valid cut position (every
    axis has extent 1)."""

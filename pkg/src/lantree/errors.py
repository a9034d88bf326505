"""Exception types raised across the toolkit."""


class LantreeError(Exception):
    """Base class for all toolkit errors."""


class IngestionError(LantreeError):
    """A document could not be read or tokenized."""


class TokenizerError(LantreeError):
    """Bad tokenizer spec, unknown token id, or malformed input."""


class TreeError(LantreeError):
    """Invalid tree operation (seed mismatch, bad context, merge conflict)."""


class TreeFormatError(LantreeError):
    """Persistent tree file is corrupt, truncated, or version-incompatible."""


class ProbeError(LantreeError):
    """Backend probing failed after retries, or the response broke protocol."""


class TokenizerMismatchError(LantreeError):
    """Two artifacts built with different tokenizers were combined."""

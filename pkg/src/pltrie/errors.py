"""Exception types shared across the package."""


class PltError(Exception):
    """Base class for package errors."""


class ModelFormatError(PltError):
    """Malformed model file or archive block."""


class VocabularyError(PltError):
    """Invalid vocabulary definition or unknown token name."""


class SequenceError(PltError):
    """Sequence contains reserved or out-of-range token ids."""


class ZeroProbabilityError(PltError):
    """Sequence has zero probability under the model and cannot be coded."""


class DecodeError(PltError):
    """Bitstream or record cannot be decoded."""


class AbsoluteContinuityError(PltError):
    """KL divergence undefined: reference assigns zero mass where the source does not."""

    def __init__(self, token: int, message: str | None = None):
        self.token = token
        super().__init__(message or f"token {token} has positive source mass but zero reference mass")

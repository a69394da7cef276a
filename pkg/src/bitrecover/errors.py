"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """An argument is outside the domain an operation accepts."""


class ContractViolation(RuntimeError):
    """Inputs are individually valid but violate a pairing contract.

    Raised, for example, when an image passed as the quantized partner of
    another was not produced by quantizing it.
    """


class FormatError(ValueError):
    """A file or byte stream could not be decoded.

    ``offset`` is the byte position at which decoding failed, when known.
    """

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)

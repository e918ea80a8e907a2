"""Exception hierarchy shared across the package."""


class BlindFactorError(Exception):
    """Base class for all package errors."""


class MalformedComponentError(BlindFactorError, ValueError):
    """A component's gates overlap or reference qubits outside the register."""


class SizeError(BlindFactorError, ValueError):
    """A register is larger than the configured simulation cap."""


class DecodeError(BlindFactorError, ValueError):
    """A bit string could not be parsed into a circuit."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at bit offset {offset})")
        self.offset = offset


class ResourceError(BlindFactorError, ValueError):
    """Not enough ancilla qubits for a requested decomposition."""


class EncodingError(BlindFactorError, ValueError):
    """The orbit of the base does not fit the second register."""


class PreconditionError(BlindFactorError, ValueError):
    """An operation was called with arguments violating its precondition."""

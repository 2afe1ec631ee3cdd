"""Exception hierarchy shared by all deepfs modules."""


class DeepFSError(Exception):
    pass


class InvalidInputError(DeepFSError, ValueError):
    pass


class DimensionError(InvalidInputError):
    pass


class UnsupportedDimensionError(InvalidInputError):
    pass


class InsufficientSamplesError(InvalidInputError):
    pass


class InvalidLabelError(InvalidInputError):
    pass


class ConfigError(InvalidInputError):
    pass


class DivergenceError(DeepFSError, ArithmeticError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, loss):
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss

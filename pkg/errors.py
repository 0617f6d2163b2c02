"""Exception hierarchy shared by every package in the situation-graph VQA system."""


class SHGError(Exception):
    """Base class for all errors raised by this project."""


# Validation family: bad input caught before any compute (CLI exit code 1)

class ConfigError(SHGError):
    """Invalid or inconsistent configuration."""


class SchemaError(SHGError):
    """Dataset, dump or checkpoint content does not match its schema."""


class VocabularyError(SHGError):
    """A label or index is unknown to the vocabulary it refers to."""

    def __init__(self, kind: str, labels):
        self.kind = kind
        self.labels = list(labels)
        super().__init__(f"unknown {kind} label(s): {', '.join(map(str, self.labels))}")


# Runtime family (CLI exit code 2)

class DimensionError(SHGError):
    """Tensor shapes are incompatible for an operation."""


class ContractError(SHGError):
    """A function precondition was violated by its caller."""


class TapeError(ContractError):
    """Backward was requested for a loss that is not on the computation tape."""


class MaskError(ContractError):
    """An attention mask would block every key for some query."""


class ReportError(SHGError):
    """A metric or report cannot be computed from the given data."""


VALIDATION_ERRORS = (ConfigError, SchemaError, VocabularyError)

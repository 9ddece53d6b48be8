"""Exception hierarchy. CLI exit codes hang off these classes."""


class BiasAuditError(Exception):
    """Base class for all errors raised by biasaudit."""

    exit_code = 1


class ValidationError(BiasAuditError, ValueError):
    """Malformed or out-of-domain input."""

    exit_code = 2


class SchemaError(ValidationError):
    pass


class ScoreFileError(ValidationError):
    """A score document failed validation; ``row`` is 1-based, header = row 1."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class EmptyBucketError(BiasAuditError, ValueError):
    """An estimator was asked for a rate over zero scores."""


class NotMeasurableError(BiasAuditError):
    """No subgroup has both the attribute-present and attribute-absent side."""

    exit_code = 4

    def __init__(self, attribute, message=None):
        self.attribute = attribute
        super().__init__(message or f"attribute {attribute!r} is not measurable: "
                                    "no subgroup has both sides populated")


class InsufficientDataError(ValidationError):
    """Too few values for a statistical test."""


class UndefinedCorrelationError(ValidationError):
    """Correlation of a constant vector."""

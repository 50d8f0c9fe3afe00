"""Exception types shared across the package."""


class RepStratError(Exception):
    """Base class for all repstrat errors."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_json_dict(self):
        return {
            "type": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class CsvError(RepStratError):
    """Malformed CSV input; carries the offending line number when known."""


class DomainError(RepStratError):
    """A value violates a domain constraint (negative amount, bad probability, ...)."""


class SpecError(RepStratError):
    """A precision or simulation spec is over- or under-determined, or malformed."""


class StratificationGapError(DomainError):
    """Claim amounts fell between strata; details list the offending amounts."""


class ConsistencyError(RepStratError):
    """Sparse sample statistics contradict the supplied summary values."""


class StructureError(RepStratError):
    """Plan, frame, or sample structures do not line up with each other."""

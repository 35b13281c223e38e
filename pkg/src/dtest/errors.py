"""Exception hierarchy.

Every error carries the CLI exit code it maps to, so the command layer never
has to re-classify anything.
"""


class DtestError(Exception):
    exit_code = 2
    kind = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        return {"type": self.kind, "message": self.message, "details": self.details}


class ParameterError(DtestError, ValueError):
    kind = "parameter_error"


class ValidationError(DtestError, ValueError):
    kind = "validation_error"


class ParseError(ValidationError):
    kind = "parse_error"


class ShapeError(ValidationError):
    kind = "shape_error"


class EmptyInputError(ValidationError):
    kind = "empty_input"


class RangeError(ValidationError):
    kind = "range_error"


class EmptyReport(DtestError, ValueError):
    kind = "empty_report"


class OracleRangeError(DtestError, ValueError):
    kind = "oracle_range_error"


class IndistinguishableRows(DtestError):
    """Raised when some row pairs match in every column, so no test exists."""

    exit_code = 3
    kind = "indistinguishable_rows"

    def __init__(self, pairs, row_labels=None):
        self.pairs = [tuple(p) for p in pairs]
        details = {"pairs": [list(p) for p in self.pairs]}
        if row_labels is not None:
            details["label_pairs"] = [[row_labels[a], row_labels[b]] for a, b in self.pairs]
        super().__init__(f"{len(self.pairs)} row pair(s) match in every column", **details)


class TractabilityError(DtestError):
    exit_code = 4
    kind = "tractability_limit"

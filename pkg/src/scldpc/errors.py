"""Exception hierarchy. Each class carries the CLI exit code used for it."""


class SCLDPCError(Exception):
    exit_code = 1


class InvalidParamsError(SCLDPCError, ValueError):
    exit_code = 3


class ConstructionUndefinedError(InvalidParamsError):
    """gcd(d_r, d_l) == 1: the coupled chain cannot be formed."""


class DegenerateRateError(InvalidParamsError):
    """The design rate would be zero or negative."""


class SearchExhaustedError(SCLDPCError):
    exit_code = 4


class InfeasibleDegreeError(SCLDPCError):
    exit_code = 5


class MatrixFormatError(SCLDPCError, ValueError):
    """Malformed matrix file. ``line``/``column`` are 1-based when known."""

    exit_code = 6

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class InconsistentMatrixError(MatrixFormatError):
    """Row and column adjacency lists disagree."""


class HypothesisNotMetError(SCLDPCError, ValueError):
    exit_code = 7


class MalformedPathError(SCLDPCError, ValueError):
    exit_code = 8


class DimensionMismatchError(SCLDPCError, ValueError):
    exit_code = 9


class BracketError(SCLDPCError):
    exit_code = 10

"""Exception types raised across the package.

Every error derives from :class:`WlraError`.  The CLI maps the three
families (parse, infeasible, solver) onto distinct exit codes.
"""


class WlraError(Exception):
    """Base class for all package errors."""


class ParseError(WlraError):
    """Malformed input file; carries the offending line when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)


class ShapeMismatch(WlraError, ValueError):
    pass


class BadLength(WlraError, ValueError):
    """Transform length is not a power of two."""


class NonFinite(WlraError, ValueError):
    pass


class NegativeWeight(WlraError, ValueError):
    def __init__(self, i, j=None):
        self.index = (i, j) if j is not None else (i,)
        loc = f"({i}, {j})" if j is not None else f"[{i}]"
        super().__init__(f"negative weight at {loc}")


class SolverError(WlraError):
    """Numerical failure inside a solver."""


class RankDeficient(SolverError):
    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"rank deficient at column {column}")


class NoConvergence(SolverError):
    def __init__(self, iterations, message=None, rows=None):
        self.iterations = iterations
        self.rows = rows
        super().__init__(message or f"no convergence after {iterations} iterations")


class DegenerateWeights(SolverError):
    def __init__(self, rows, message=None):
        self.rows = list(rows)
        super().__init__(message or f"{len(self.rows)} rows with degenerate weights")


class DegenerateInput(SolverError):
    pass


class OrthogonalSubspaces(WlraError, ValueError):
    """cos of the largest principal angle vanishes, so tan is undefined."""


class InfeasibleGamma(WlraError):
    def __init__(self, planted, realized):
        self.planted = planted
        self.realized = realized
        super().__init__(
            f"clamping weights to be nonnegative moved gamma from {planted:.6g} "
            f"to {realized:.6g} (more than 10%)"
        )

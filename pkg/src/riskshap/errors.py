"""Exception hierarchy.

Input problems (bad files, bad flags) derive from :class:`InputError`;
numerical failures and guard trips derive from :class:`NumericError`.
The CLI maps the two families to different exit codes.
"""


class RiskShapError(Exception):
    pass


class InputError(RiskShapError, ValueError):
    pass


class NumericError(RiskShapError, ArithmeticError):
    pass


class CsvFormatError(InputError):
    """Malformed CSV content; ``row`` and ``col`` are 1-based file coordinates."""

    def __init__(self, message, path=None, row=None, col=None):
        self.path = path
        self.row = row
        self.col = col
        where = []
        if path is not None:
            where.append(str(path))
        if row is not None:
            where.append(f"row {row}")
        if col is not None:
            where.append(f"col {col}")
        prefix = ", ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ModelFileError(InputError):
    """Model JSON that fails to parse or validate.

    ``position`` is either ``"line L column C"`` for syntax errors or a
    JSON path such as ``$.layers[1].weights`` for schema errors.
    """

    def __init__(self, message, path=None, position=None):
        self.message = message
        self.path = path
        self.position = position
        where = ":".join(str(p) for p in (path, position) if p is not None)
        super().__init__(f"{where}: {message}" if where else message)


class ModelEvaluationError(NumericError):
    pass


class GameEvaluationError(NumericError):
    """A characteristic value could not be computed; ``subset`` names the coalition."""

    def __init__(self, message, subset):
        self.subset = tuple(subset)
        super().__init__(f"coalition {list(self.subset)}: {message}")


class EnumerationLimitError(NumericError):
    pass


class SimplexError(NumericError):
    pass


class InfeasibleError(SimplexError):
    pass


class UnboundedError(SimplexError):
    pass


class IterationLimitError(SimplexError):
    """Raised when the simplex iteration cap is hit.

    ``best_x`` holds the last primal-feasible point (or ``None`` if phase one
    never reached feasibility).
    """

    def __init__(self, message, best_x=None, iterations=0):
        self.best_x = best_x
        self.iterations = iterations
        super().__init__(message)

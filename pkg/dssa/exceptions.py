class DssaError(Exception):
    """Base exception for solver, problem and harness errors"""
    def __init__(self, message: str = "Solver library error"):
        self.message = message
        super().__init__(message)


class ConfigError(DssaError):
    """Invalid experiment configuration; carries the offending line when known"""
    exit_code = 2

    def __init__(self, message: str = "Invalid configuration", path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        location = path or "<config>"
        if line is not None:
            location = f"{location}:{line}"
        super().__init__(message=f"{location}: {message}")


class UnknownSuiteError(DssaError):
    exit_code = 2

    def __init__(self, suite: str, known: list[str] | None = None):
        message = f"Unknown verify suite '{suite}'"
        if known:
            message += f" (expected one of: {', '.join(known)})"
        super().__init__(message=message)


class ProblemMismatchError(DssaError):
    exit_code = 2

    def __init__(self, message: str = "Compared configs do not share the same problem and seed"):
        super().__init__(message=message)


class ProblemConstructionError(DssaError):
    exit_code = 2

    def __init__(self, message: str = "Test problem could not be constructed"):
        super().__init__(message=message)


class DimensionMismatchError(DssaError):
    def __init__(self, expected: int, actual, what: str = "vector"):
        super().__init__(message=f"Dimension mismatch for {what}: expected {expected}, got {actual}")


class SolverAbortError(DssaError):
    """Base exception for states in which a solve cannot continue"""
    exit_code = 3

    def __init__(self, message: str = "Solver aborted", k: int | None = None):
        self.k = k
        if k is not None:
            message = f"iteration {k}: {message}"
        super().__init__(message=message)


class LineSearchExhaustedError(SolverAbortError):
    def __init__(self, max_backtracks: int, k: int | None = None):
        super().__init__(
            message=f"line search exceeded {max_backtracks} backtracks; the oracle is not Hölder continuous "
                    f"or the state is numerically degenerate",
            k=k,
        )


class DegenerateStepError(SolverAbortError):
    def __init__(self, message: str = "empirical operator vanished at the line-search point", k: int | None = None):
        super().__init__(message=message, k=k)


class InvariantViolationError(SolverAbortError):
    def __init__(self, message: str = "per-iteration invariant violated", k: int | None = None):
        super().__init__(message=message, k=k)


class DiagnosticsError(DssaError):
    """Base exception for diagnostics and fitting errors"""
    def __init__(self, message: str = "Diagnostics failed"):
        super().__init__(message=message)


class AllZeroError(DiagnosticsError):
    def __init__(self, message: str = "All values are zero or nonpositive; nothing to fit on a log scale"):
        super().__init__(message=message)

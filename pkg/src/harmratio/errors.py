"""Exception hierarchy shared across the package."""


class HarmRatioError(Exception):
    """Base class for all library errors."""


class InvalidInstanceError(HarmRatioError, ValueError):
    """An instance violates its structural invariants."""


class InvalidOutcomeError(HarmRatioError, ValueError):
    """An outcome is not valid for the instance it is evaluated against."""


class CapExceededError(HarmRatioError, ValueError):
    """A desk-scale size cap was exceeded.

    The message always carries a remediation hint (raise the cap, or switch
    to a backend that does not enumerate).
    """


class InfeasibleError(HarmRatioError):
    """A constraint system (load structure, floors, LP) has no solution."""


class SolverError(HarmRatioError):
    """A numerical routine stalled or hit its iteration cap."""


class ApproxPFError(SolverError):
    """The approximate-PF solver hit its iteration cap before certification.

    ``incumbent`` holds the best point found and ``certified`` its PF value.
    """

    def __init__(self, message, incumbent=None, certified=float("inf")):
        super().__init__(message)
        self.incumbent = incumbent
        self.certified = certified


class ParseError(HarmRatioError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line

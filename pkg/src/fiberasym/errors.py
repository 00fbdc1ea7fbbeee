"""Exception hierarchy shared by all modules.

Exit-code mapping in the CLI: InputError -> 1, the numerical refusals
(DivergenceError, UnsupportedCaseError, WrongCaseError, ConvergenceError) -> 2.
"""


class FiberAsymError(Exception):
    """Base class; carries the module/operation that raised it."""

    def __init__(self, message, module=None, operation=None):
        self.module = module
        self.operation = operation
        prefix = ""
        if module or operation:
            prefix = f"[{module or '?'}.{operation or '?'}] "
        super().__init__(prefix + message)


class InputError(FiberAsymError):
    """Malformed or inconsistent input (dimension mismatch, bad grid, ...)."""


class DivergenceError(FiberAsymError):
    """The requested integral or bracket does not converge."""


class UnsupportedCaseError(FiberAsymError):
    """The germ falls outside the supported classification regimes."""


class WrongCaseError(FiberAsymError):
    """A different branch of the theory applies (e.g. n/k integer)."""


class ConvergenceError(FiberAsymError):
    """An iterative/extrapolation scheme failed its convergence test."""

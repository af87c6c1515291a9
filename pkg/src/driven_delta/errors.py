"""Exception types shared across the package."""


class DrivenDeltaError(Exception):
    """Base class for all package errors."""


class BranchSideError(DrivenDeltaError):
    """On-cut evaluation requested without picking a side of the cut."""


class BranchPointError(DrivenDeltaError):
    """Evaluation at a branch point where the function is undefined."""


class KernelPoleError(DrivenDeltaError):
    """Kernel evaluated at its simple pole p = 0.

    Carries the residue so callers doing contour arithmetic can use it.
    """

    def __init__(self, message, residue):
        super().__init__(message)
        self.residue = residue


class DomainError(DrivenDeltaError):
    """Input outside the admissible parameter domain of an operation."""


class ConvergenceError(DrivenDeltaError):
    """An iterative scheme failed to reach the requested tolerance.

    `diagnostic` holds the last residual / iterate, whatever the scheme
    can usefully report.
    """

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class ResonanceRegimeError(DrivenDeltaError):
    """Pole separation failed: the caller must switch to the resonance path."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class RefinementError(DrivenDeltaError):
    """Step-halving check failed; carries the observed convergence order."""

    def __init__(self, message, observed_order=None):
        super().__init__(message)
        self.observed_order = observed_order


class StabilityError(DrivenDeltaError):
    """Grid-solver stability audit (norm drift) failed."""


class ManifestError(DrivenDeltaError):
    """Invalid run manifest / CLI configuration."""


class ValidationError(DrivenDeltaError):
    """An invariant in the validation battery failed."""

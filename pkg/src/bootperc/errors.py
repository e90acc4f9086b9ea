class ValidationError(ValueError):
    """Invalid model parameters, distributions, or input files."""


class OutOfRegimeError(ValueError):
    """An asymptotic formula was asked for outside its validity region."""


class DegenerateRegimeError(ValueError):
    """A numerical criticality search found no interior minimum."""


class BranchBoundaryError(ValueError):
    """Parameters sit on (or outside) the branches of a piecewise scaling law."""


class NoTransitionError(RuntimeError):
    """A sweep never crosses the 0.5 mean-fraction level."""


class BudgetExceeded(RuntimeError):
    """A sweep ran past its wall-clock budget."""

"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An input violates a stated precondition (dimension, range, spectrum)."""


class PrecisionError(PreconditionError):
    """An input error budget exceeds the bound an algorithm needs."""

    def __init__(self, name, value, bound):
        self.name = name
        self.value = value
        self.bound = bound
        super().__init__(f"{name} = {value:.3e} exceeds required bound {bound:.3e}")


class AdmissibilityError(PreconditionError):
    """A polynomial cannot be realized by the requested construction."""

"""Exception types shared across the package."""


class InputError(ValueError):
    """Rejected input: bad shape, non-finite value, out-of-range argument."""


class UnclassifiableError(InputError):
    """An (alpha, L) pair that matches no row of the geometric-type table."""

    def __init__(self, alpha, length, index=None):
        self.alpha = alpha
        self.length = length
        self.index = index
        where = "" if index is None else f" (scatterer #{index})"
        super().__init__(
            f"no geometric type for snapped pair alpha={alpha:g}, "
            f"L={'>0' if length else '0'}{where}"
        )


class NumericalError(RuntimeError):
    """A solver could not produce a usable result."""


class ConstraintInfeasibleError(NumericalError):
    """W_i - P has negative mass beyond the tolerated violation."""

    def __init__(self, violation_norm, limit, layer=None):
        self.violation_norm = violation_norm
        self.limit = limit
        self.layer = layer
        where = "" if layer is None else f"layer {layer}: "
        super().__init__(
            f"{where}constraint violation {violation_norm:.3e} exceeds {limit:.3e}"
        )

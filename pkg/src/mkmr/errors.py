"""Exception types shared across modules."""


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class CapacityError(ValueError):
    """More message streams than recipients."""

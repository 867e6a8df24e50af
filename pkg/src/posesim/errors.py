"""Exception types shared across the package."""


class SchemaError(ValueError):
    """A file, skeleton, or config does not satisfy its schema."""


class DegenerateGeometryError(ValueError):
    """Geometry too degenerate to proceed (zero-length bone, collinear basis points)."""


class SimulationDiverged(RuntimeError):
    """Simulation state became non-finite or unbounded."""

    def __init__(self, message, quantity=None, step=None):
        super().__init__(message)
        self.quantity = quantity
        self.step = step

"""Exception types shared across the package."""


class MammError(Exception):
    """Base class for all package-specific errors."""


class BvhError(MammError, ValueError):
    """Malformed BVH input; message includes the offending line number."""


class RotationProjectionError(MammError, ValueError):
    """Rotation projection hit a (near-)singular matrix."""


class SolverError(MammError, RuntimeError):
    """Transport solver failed to produce a usable plan."""


class InfeasibleRowError(SolverError):
    """A kernel row has no admissible positive entry."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"kernel row {row} has no positive admissible entry")


class PipelineError(MammError, ValueError):
    """Invalid alignment inputs or configuration."""

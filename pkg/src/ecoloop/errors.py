"""Exception types shared across the toolkit."""


class EcoloopError(Exception):
    """Base class for all toolkit errors."""


class ModelError(EcoloopError):
    """Structural problem in a variability-model document (duplicate id,
    dangling reference, cycle, malformed group)."""


class UnknownNodeError(EcoloopError):
    """A node id was referenced that does not exist in the model."""


class ConflictError(EcoloopError):
    """Selection closure or a reconfiguration hit a constraint conflict."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)


class ProfileError(EcoloopError):
    """Malformed energy-profile document or repository."""


class OutOfRangeError(EcoloopError):
    """Parameter value outside a profile's sampled range."""


class UnknownMetricError(EcoloopError):
    """Output metric not present in a profile's samples."""


class CompositionError(EcoloopError):
    """A composition chain could not be evaluated."""

    def __init__(self, message, stage_index=None):
        super().__init__(message)
        self.stage_index = stage_index


class GridMismatchError(EcoloopError):
    """Two comparison series do not share the same parameter grid."""


class RuleConfigError(EcoloopError):
    """A rule set references unknown monitors, nodes, or is malformed."""


class UnmonitoredParameterError(RuleConfigError):
    """A rule's event parameter has no registered monitor (wiring error,
    caught at configuration time before any event is processed)."""


class NoDataError(EcoloopError):
    """A monitor aggregate was requested before any observation arrived."""


class WorkloadError(EcoloopError):
    """Workload phase description or trace file is invalid."""

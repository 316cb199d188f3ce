"""Exception types shared across the package.

Invalid arguments to individual operations raise plain ``ValueError``;
the classes here cover failures that carry simulation context (which
element inverted, at which step the run diverged, ...) so drivers and
the CLI can map them to exit codes.
"""


class SoftGraspError(Exception):
    """Base class for simulation-level failures."""


class ConfigurationError(SoftGraspError):
    """A scene/material/gripper configuration is inconsistent or incomplete."""


class ElementInversionError(SoftGraspError):
    """An element's deformation gradient lost positive determinant."""

    def __init__(self, element_id=None, det=None):
        self.element_id = element_id
        self.det = det
        where = "element %s" % element_id if element_id is not None else "input"
        detail = " (det F = %.3e)" % det if det is not None else ""
        super().__init__("non-positive deformation gradient determinant in %s%s"
                         % (where, detail))


class DivergenceError(SoftGraspError):
    """The explicit update produced non-finite state."""

    def __init__(self, step_index, time=None):
        self.step_index = step_index
        self.time = time
        at = " (t = %.6e s)" % time if time is not None else ""
        super().__init__("non-finite state after step %d%s" % (step_index, at))


class ConvergenceError(SoftGraspError):
    """Dynamic relaxation failed to reach the quasi-static criterion."""

    def __init__(self, energy_ratio, max_time):
        self.energy_ratio = energy_ratio
        self.max_time = max_time
        super().__init__(
            "kinetic/internal energy ratio %.3e still above threshold at t = %.3e s"
            % (energy_ratio, max_time))


class RigidPenetrationError(SoftGraspError):
    """A rigid pad penetrates a rigid object beyond the admissible tolerance."""

    def __init__(self, depth, limit):
        self.depth = depth
        self.limit = limit
        super().__init__("rigid pad penetration %.3e m exceeds limit %.3e m"
                         % (depth, limit))

"""Exception types raised by the four-body routines."""


class FourBodyError(Exception):
    """Base class for all package errors."""


class DegenerateMasses(FourBodyError, ValueError):
    """Two masses coincide, so the shape tetrahedron is undefined."""


class InconsistentAreas(FourBodyError, ValueError):
    """Directed areas are not proportional to the shape-space normal."""


class Collision(FourBodyError):
    """Two bodies are (numerically) at the same position."""


class CollisionAbort(Collision):
    """Integration stopped on a close encounter.

    Attributes
    ----------
    t : float
        Time of the last accepted step.
    min_distance : float
        Smallest interparticle distance at that time.
    """

    def __init__(self, t, min_distance):
        super().__init__(f"close encounter at t={t:.17g} (r_min={min_distance:.3e})")
        self.t = t
        self.min_distance = min_distance


class GimbalNear(FourBodyError):
    """Euler-angle chart too close to its singular set."""


class SolverFailure(FourBodyError):
    """Base class for central-configuration solver failures."""


class NoRoot(SolverFailure):
    """No admissible multiplier makes the configuration planar."""


class NegativeMass(SolverFailure):
    """Every planar root recovers at least one non-positive mass."""


class ComplexDistance(SolverFailure):
    """The admissible multiplier interval is empty."""

"""Exception types shared across the package."""


class StochFemError(Exception):
    """Base class for all library errors."""


class DegeneratePoint(StochFemError):
    """Point too close to the origin for a radial projection."""


class OutOfBand(StochFemError):
    """Point outside the tubular neighbourhood where the lift is valid."""


class SingularGeometry(StochFemError):
    """A geometric coefficient became (near-)singular."""


class OutsideTriangle(StochFemError):
    """Queried point does not lie inside the given triangle."""


class NoConvergence(StochFemError):
    """Iterative solver failed to reach the requested tolerance."""


class UsageError(StochFemError):
    """Invalid command line or configuration input."""

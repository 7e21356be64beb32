"""Typed exceptions shared across the package."""


class GalcertError(Exception):
    """Base class for all package errors."""


class SingularInput(GalcertError):
    """Input lies on (or too close to) a singular point of the evaluated object."""


class NoConvergence(GalcertError):
    """An adaptive numerical procedure failed to reach the requested tolerance."""


class IrreducibleOverField(GalcertError):
    """A polynomial has an irreducible factor of degree >= 2 over Q(sqrt(-3))."""


class NotAPole(GalcertError):
    """Residue or Laurent data requested at a point that is not a pole."""


class NotASingularity(GalcertError):
    """Local exponent data requested at an ordinary point of an ODE."""


class IrregularSingular(GalcertError):
    """A singular point fails the regular-singular order conditions."""


class SingularityTooClose(GalcertError):
    """A continuation path passes closer to a singularity than the declared clearance."""


class SingularEncounter(GalcertError):
    """Trajectory integration approached a singular set.

    Carries the offending time and state so callers can report where the
    integration had to stop.
    """

    def __init__(self, message, time=None, state=None):
        super().__init__(message)
        self.time = time
        self.state = state

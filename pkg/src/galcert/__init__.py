"""galcert: certification pipeline for fluid-ellipsoid non-integrability.

The package evaluates the elliptic-integral self-interaction potential with
quadrature oracles, integrates the full and reduced Hamiltonian systems,
builds the variational-equation family in the position variable with exact
branch tracking, computes numerical monodromy of the associated linear ODEs,
and runs Kovacic's algorithm over Q(sqrt(-3)) to certify the SL2(C) Galois
group of the exact limit equation.
"""

from .errors import (
    GalcertError,
    IrreducibleOverField,
    IrregularSingular,
    NoConvergence,
    NotAPole,
    NotASingularity,
    SingularEncounter,
    SingularInput,
    SingularityTooClose,
)

__all__ = [
    "GalcertError",
    "IrreducibleOverField",
    "IrregularSingular",
    "NoConvergence",
    "NotAPole",
    "NotASingularity",
    "SingularEncounter",
    "SingularInput",
    "SingularityTooClose",
]

__version__ = "0.1.0"

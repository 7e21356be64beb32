"""Variational equations along invariant-plane orbits, in time and in position.

Three related linear second-order objects live here.

* The time-domain normal block: the linearization of the flow transverse to
  the invariant plane, d(dp1)/dt = -F1 dq1, d(dq1)/dt = 2 q2 dp1, where F1 is
  the second normal derivative of the Hamiltonian.  The momentum part of F1
  (a p2^2 Hessian term) is exposed separately because the closed-form family
  below omits it.

* The closed-form family in the position variable t: coefficients linear in
  the tracked transcendental s = i arccos(2 sqrt2 t^(-3/2)) / (sqrt2
  sqrt(8-t^3)) and in the energy E, together with its sheaf shifts
  s -> s + 2 pi i k / (sqrt2 sqrt(8-t^3)) and the exact polynomial limit
  equation reached as k -> infinity.  This family is the object whose
  monodromy and Galois group the certification pipeline analyses.

* The corrected position-domain equation: the transverse linearization
  rewritten as a function of t using the calibrated potential, the actual
  orbit speed, and the full Hessian.  It is the member of this trio that the
  finite-difference oracle validates; the report records the measured
  disagreement between it and the closed-form family.

Branch tracking: coefficients are multivalued in t.  A BranchState carries
the tuple (w, u, v) of tracked values of arccos(2 sqrt2 t^(-3/2)),
sqrt(8 - t^3) and sqrt(t); continuation advances them by their exact
derivative relations along paths, never by re-evaluating principal branches
mid-path.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Sequence, Tuple

from . import potential
from .algebra import (
    FieldElement,
    Polynomial,
    RationalFunction,
    factor,
    laurent_coefficients,
    residue_at,
)
from .errors import IrregularSingular, NotASingularity, SingularInput

SQRT2 = math.sqrt(2.0)
TWO_PI_I = 2j * math.pi


# ---------------------------------------------------------------------------
# branch tracking
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchState:
    """Tracked branch data at a point t of the coefficient Riemann surface.

    w, u, v are the continued values of arccos(2 sqrt2 t^(-3/2)),
    sqrt(8 - t^3) and sqrt(t).  They satisfy u^2 = 8 - t^3, v^2 = t and
    cos(w) = 2 sqrt2 v^(-3) up to continuation error.
    """

    t: complex
    w: complex
    u: complex
    v: complex

    @staticmethod
    def at_real_point(t0: float) -> "BranchState":
        """Base branch on the real ray, continued from (0, 2) through the
        upper half plane: u = -i sqrt(t0^3 - 8) for t0 > 2, where w is real;
        on (0, 2) the continuation has w on the positive imaginary axis."""
        if t0 <= 0.0:
            raise SingularInput("base point must be positive")
        t0c = complex(t0)
        w = cmath.acos(2.0 * SQRT2 * t0c ** -1.5)
        if w.imag < 0.0:
            w = -w
        u = -1j * cmath.sqrt(t0c ** 3 - 8.0)
        v = cmath.sqrt(t0c)
        return BranchState(t0c, w, u, v)

    @property
    def s(self) -> complex:
        return 1j * self.w / (SQRT2 * self.u)

    def shifted(self, k: int) -> "BranchState":
        """Sheaf translation applied k times: w -> w + 2 pi k."""
        return replace(self, w=self.w + 2.0 * math.pi * k)

    def derivative(self) -> Tuple[complex, complex, complex]:
        """(dw/dt, du/dt, dv/dt) from the exact defining relations."""
        sw = cmath.sin(self.w)
        if abs(sw) < 1e-14:
            raise SingularInput(f"branch derivative singular (sin w = 0) at t = {self.t}")
        dw = 3.0 * SQRT2 * self.v ** -5 / sw
        du = -1.5 * self.t ** 2 / self.u
        dv = 0.5 / self.v
        return dw, du, dv

    def residuals(self) -> Tuple[float, float, float]:
        return (
            abs(self.u * self.u - (8.0 - self.t ** 3)),
            abs(self.v * self.v - self.t),
            abs(cmath.cos(self.w) - 2.0 * SQRT2 * self.v ** -3),
        )


def sheaf_shift(state: BranchState, k: int = 1) -> complex:
    """The coefficient shift 2 pi i k / (sqrt2 u) added to s by sigma^k."""
    return TWO_PI_I * k / (SQRT2 * state.u)


# ---------------------------------------------------------------------------
# time-domain normal block
# ---------------------------------------------------------------------------


def nve_time_matrix(q2: complex):
    """Normal block [[0, -F1], [2 q2, 0]] for the ordering (dp1, dq1).

    F1 here is the potential part only (the second normal derivative of J);
    the momentum completion lives in nve_time_matrix_full and is the version
    the finite-difference oracle validates.
    """
    f1 = potential.F1_closed(q2)
    return [[0.0, -f1], [2.0 * q2, 0.0]]


def hessian_momentum_term(q2: complex, p2: complex) -> complex:
    """The p2^2 part of the second normal derivative of the Hamiltonian."""
    return q2 ** 5 * p2 * p2 / (q2 ** 3 + 1.0) ** 2


def nve_time_matrix_full(q2: complex, p2: complex):
    """Normal block with the full Hessian entry F1 + momentum term."""
    f1 = potential.F1_closed(q2) + hessian_momentum_term(q2, p2)
    return [[0.0, -f1], [2.0 * q2, 0.0]]


# ---------------------------------------------------------------------------
# closed-form family in t and its polynomial limit
# ---------------------------------------------------------------------------

# coefficients ascending in t; the family is  (P*s + E*Pe + Pc) per order
_A2_S = (0, 0, 256, 0, 0, 192, 0, 0, -60, 0, 0, 4)
_A2_E = (0, 128, 0, 0, 96, 0, 0, -30, 0, 0, 2)
_A1_S = (0, -640, 0, 0, -72, 0, 0, 75, 0, 0, -7)
_A1_C = (0, 48, 0, 0, 42, 0, 0, -6)
_A1_E = (-384, 0, 0, -96, 0, 0, 42, 0, 0, -3)
_A0_S = (0, 0, 0, 0, 0, 0, 0, 0, -64, 0, 0, 2)
_A0_C = (0, 0, 0, 0, 0, -64, 0, 0, -4)

# corrected transverse linearization (see module docstring); same layout
_B2_E = (0, 0, 0, 0, 256, 0, 0, 192, 0, 0, -60, 0, 0, 4)
_B2_S = (0, 0, 0, 0, 0, 1024, 0, 0, 768, 0, 0, -240, 0, 0, 16)
_B1_C = (0, 0, 0, 0, 192, 0, 0, 168, 0, 0, -24)
_B1_E = (0, 0, 0, 256, 0, 0, -192, 0, 0, 36, 0, 0, -2)
_B1_S = (0, 0, 0, 0, 1536, 0, 0, -288, 0, 0, 108, 0, 0, -12)
_B0_C = (-32, 0, 0, -66, 0, 0, -36, 0, 0, -2)
_B0_E = (0, 0, 128, 0, 0, 96, 0, 0, -30, 0, 0, 2)
_B0_S = (0, 0, 0, 480, 0, 0, 321, 0, 0, -150, 0, 0, 9)


def _horner(coeffs: Sequence[float], t: complex) -> complex:
    out = 0j
    for c in reversed(coeffs):
        out = out * t + c
    return out


def family_coeffs_ts(t: complex, s: complex, E: complex) -> Tuple[complex, complex, complex]:
    """Coefficient triple at explicit (t, s); s must already carry any shift."""
    a2 = _horner(_A2_S, t) * s + _horner(_A2_E, t) * E
    a1 = _horner(_A1_S, t) * s + _horner(_A1_C, t) + _horner(_A1_E, t) * E
    a0 = _horner(_A0_S, t) * s + _horner(_A0_C, t)
    return a2, a1, a0


def family_coeffs(state: BranchState, E: complex, k: int = 0) -> Tuple[complex, complex, complex]:
    """Coefficient triple (a2, a1, a0) of the closed-form family member k.

    k = 0 is the base member; k shifts s by 2 pi i k / (sqrt2 u).  Requires t
    away from the zeros of t (t^3 - 8)(t^3 + 1).
    """
    t = state.t
    _guard_family_point(t)
    s = state.s + (sheaf_shift(state, k) if k else 0.0)
    return family_coeffs_ts(t, s, E)


def eq_base_coeffs(state: BranchState, E: complex) -> Tuple[complex, complex, complex]:
    """The k = 0 member of the family (the base transcendental equation)."""
    return family_coeffs(state, E, 0)


def transverse_coeffs_ts(t: complex, s: complex, E: complex) -> Tuple[complex, complex, complex]:
    """Corrected-equation coefficients at explicit (t, s)."""
    a2 = _horner(_B2_E, t) * E + _horner(_B2_S, t) * s
    a1 = _horner(_B1_C, t) + _horner(_B1_E, t) * E + _horner(_B1_S, t) * s
    a0 = _horner(_B0_C, t) + _horner(_B0_E, t) * E + _horner(_B0_S, t) * s
    return a2, a1, a0


def transverse_linearization_coeffs(state_or_t, E: complex) -> Tuple[complex, complex, complex]:
    """Corrected position-domain equation for X = dq1 along a plane orbit.

    Derived from the calibrated potential, the actual orbit speed
    (dq2/dtau)^2 = 4 t^4 (E - V) / (t^3 + 1), and the full Hessian; validated
    against finite differences of offset orbits to ~1e-11.
    """
    if isinstance(state_or_t, BranchState):
        t, s = state_or_t.t, state_or_t.s
    else:
        t = complex(state_or_t)
        s = potential.s_value(t)
    _guard_family_point(t)
    return transverse_coeffs_ts(t, s, E)


def _guard_family_point(t: complex) -> None:
    if abs(t) < 1e-10 or abs(t ** 3 - 8.0) < 1e-10 or abs(t ** 3 + 1.0) < 1e-10:
        raise SingularInput(f"coefficient family singular at t = {t}")


# ---------------------------------------------------------------------------
# exact linear ODEs with polynomial coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactODE2:
    """a2 X'' + a1 X' + a0 X = 0 with exact polynomial coefficients."""

    a2: Polynomial
    a1: Polynomial
    a0: Polynomial
    tag: str = ""

    def coeffs_complex(self, t: complex) -> Tuple[complex, complex, complex]:
        return (
            self.a2.eval_complex(t),
            self.a1.eval_complex(t),
            self.a0.eval_complex(t),
        )

    def p(self) -> RationalFunction:
        return RationalFunction(self.a1, self.a2)

    def q(self) -> RationalFunction:
        return RationalFunction(self.a0, self.a2)

    def singularities(self) -> List[FieldElement]:
        """Distinct finite singular points (zeros of a2), deterministic order."""
        fmap = factor(self.a2)
        return sorted(fmap.roots, key=lambda r: (r.embed().real, r.embed().imag))


def limit_equation() -> ExactODE2:
    """The exact polynomial equation reached from the family as k -> infinity.

    Coefficients: 4t^11 - 60t^8 + 192t^5 + 256t^2, -7t^10 + 75t^7 - 72t^4 - 640t,
    2t^11 - 64t^8.
    """
    return ExactODE2(
        Polynomial.from_int_coeffs(list(_A2_S)),
        Polynomial.from_int_coeffs(list(_A1_S)),
        Polynomial.from_int_coeffs(list(_A0_S)),
        tag="limit",
    )


def normalized_family_deviation(state: BranchState, E: complex, k: int) -> float:
    """Coefficient distance between the k-member, divided by its dominant
    factor (s + shift), and the limit equation at the state's t."""
    t = state.t
    shift_s = state.s + sheaf_shift(state, k)
    a2, a1, a0 = family_coeffs(state, E, k)
    lim = limit_equation()
    l2, l1, l0 = lim.coeffs_complex(t)
    scale = max(abs(l2), abs(l1), abs(l0))
    return max(
        abs(a2 / shift_s - l2),
        abs(a1 / shift_s - l1),
        abs(a0 / shift_s - l0),
    ) / scale


# ---------------------------------------------------------------------------
# local exponents at singular points
# ---------------------------------------------------------------------------


def indicial_exponents(e: ExactODE2, pole) -> Tuple[object, object]:
    """Exponent pair at a regular singular point, by exact residue data.

    Roots of rho (rho - 1) + p_{-1} rho + q_{-2} where p_{-1} is the residue
    of a1/a2 and q_{-2} the order-2 Laurent coefficient of a0/a2.  Exact
    FieldElement roots are returned when the discriminant is a square in the
    field, otherwise complex floats.  Raises NotASingularity at ordinary
    points and IrregularSingular when the pole orders exceed (1, 2).
    """
    pole_fe = pole if isinstance(pole, FieldElement) else FieldElement.of(pole)
    if not e.a2.eval_exact(pole_fe).is_zero():
        raise NotASingularity(f"{pole_fe} is an ordinary point")
    p = e.p()
    q = e.q()
    p_m1 = FieldElement.of(0)
    if p.den.eval_exact(pole_fe).is_zero():
        m, cs = laurent_coefficients(p, pole_fe)
        if m > 1:
            raise IrregularSingular(f"a1/a2 has pole order {m} > 1 at {pole_fe}")
        p_m1 = cs[m - 1] if m == 1 else p_m1
    q_m2 = FieldElement.of(0)
    if q.den.eval_exact(pole_fe).is_zero():
        m, cs = laurent_coefficients(q, pole_fe)
        if m > 2:
            raise IrregularSingular(f"a0/a2 has pole order {m} > 2 at {pole_fe}")
        q_m2 = cs[0] if m == 2 else q_m2
    # rho^2 + (p_m1 - 1) rho + q_m2 = 0
    b = p_m1 - FieldElement.of(1)
    disc = b * b - FieldElement.of(4) * q_m2
    rd = disc.sqrt()
    if rd is not None:
        half = FieldElement.of(Fraction(1, 2))
        return (half * (-b + rd), half * (-b - rd))
    bz = b.embed()
    dz = cmath.sqrt(disc.embed())
    return (0.5 * (-bz + dz), 0.5 * (-bz - dz))


def exponent_sum(e: ExactODE2, pole) -> FieldElement:
    """Exact sum of the two indicial exponents: 1 - residue of a1/a2."""
    pole_fe = pole if isinstance(pole, FieldElement) else FieldElement.of(pole)
    p = e.p()
    if p.den.eval_exact(pole_fe).is_zero():
        return FieldElement.of(1) - residue_at(p, pole_fe)
    return FieldElement.of(1)


def singularity_at_infinity(e: ExactODE2) -> dict:
    """Order data and regular/irregular classification of the point t = inf.

    The point is a regular singularity iff a1/a2 vanishes to order >= 1 and
    a0/a2 to order >= 2 there.  The classification is computed, not assumed.
    """
    p_ord = e.a2.degree - e.a1.degree
    q_ord = e.a2.degree - e.a0.degree
    regular = (p_ord >= 1) and (q_ord >= 2)
    ordinary = (p_ord >= 2) and (q_ord >= 4)  # stricter: equation extends regularly
    return {
        "p_order_at_infinity": p_ord,
        "q_order_at_infinity": q_ord,
        "regular_singular": bool(regular and not ordinary),
        "irregular_singular": bool(not regular),
    }

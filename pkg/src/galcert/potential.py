"""Elliptic-integral potential of the fluid self-interaction and its oracles.

The potential is

    J(q1, q2) = integral_0^inf dz / sqrt((z + 4/q2^2) (z^2 + r z + q2^2/4)),

with r = sqrt(q1^2 + q2^2).  On the symmetry axis q1 = 0 the integral becomes
elementary and has the closed form

    J(0, q2) = c * sqrt(2) q2 arccos(2 sqrt(2) q2^(-3/2)) / sqrt(q2^3 - 8)

for a constant c fixed once by the calibration run (the quadrature is the
ground truth, the closed form is the convenience).  The second normal
derivative F1 = d^2 J / dq1^2 at q1 = 0 likewise has both a quadrature form
and a closed form; the oracle chain in the tests keeps them honest against
each other and against finite differences of J itself.

Branching: the desk-scale domain is real q2 in (2, 6) where every quantity is
real under the conventions used here.  Half-integer powers of (8 - q2^3) are
evaluated on the branch obtained by continuing from (0, 2) through the upper
half plane, i.e. sqrt(8 - t^3) = -i sqrt(t^3 - 8) for t > 2.  Off this
neighbourhood, branches are path-defined; see the monodromy module.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np

from .algebra import FieldElement, omega_power
from .errors import NoConvergence, SingularInput

SQRT2 = math.sqrt(2.0)
TWO_SQRT2 = 2.0 * SQRT2

# ---------------------------------------------------------------------------
# adaptive Gauss panel quadrature
# ---------------------------------------------------------------------------

_GL_CACHE: dict = {}


def _gl_nodes(n: int):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (x, w)
    return _GL_CACHE[n]


def _panel_pair(f: Callable, a: float, b: float) -> Tuple[complex, float]:
    """Gauss estimate on [a, b] with an embedded error from order doubling."""
    x1, w1 = _gl_nodes(16)
    x2, w2 = _gl_nodes(32)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    lo = half * np.sum(w1 * f(mid + half * x1))
    hi = half * np.sum(w2 * f(mid + half * x2))
    return hi, abs(hi - lo)


def adaptive_quad(f: Callable, intervals: List[Tuple[float, float]], tol: float,
                  max_panels: int = 4000) -> complex:
    """Adaptively bisected Gauss quadrature over a union of seed intervals.

    ``f`` must accept a numpy array and return complex values.  The worst
    panel is split until the summed error estimate falls below tol.
    """
    panels = []
    for a, b in intervals:
        val, err = _panel_pair(f, a, b)
        panels.append((err, a, b, val))
    while True:
        total_err = sum(p[0] for p in panels)
        if total_err <= tol:
            return sum(p[3] for p in panels)
        if len(panels) >= max_panels:
            raise NoConvergence(
                f"quadrature stalled at error {total_err:.3e} with {len(panels)} panels"
            )
        panels.sort(key=lambda p: p[0])
        err, a, b, _ = panels.pop()
        m = 0.5 * (a + b)
        for lo, hi in ((a, m), (m, b)):
            val, perr = _panel_pair(f, lo, hi)
            panels.append((perr, lo, hi, val))


# ---------------------------------------------------------------------------
# the potential J and its derivatives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PotentialPoint:
    """Configuration point with the fixed square-root convention for r.

    The principal branch of sqrt(q1^2 + q2^2) gives r = q2 on the axis q1 = 0
    whenever Re(q2) > 0, which is the valuation used throughout.
    """

    q1: complex
    q2: complex

    @property
    def r(self) -> complex:
        return cmath.sqrt(self.q1 * self.q1 + self.q2 * self.q2)


def sigma_axis_candidates() -> List[FieldElement]:
    """The seven candidate singular abscissas of J on the axis q1 = 0.

    Exactly {0} together with the family 2 exp(i k pi / 3), k = 1..6, all of
    which lie in Q(omega).
    """
    out = [FieldElement.of(0)]
    two = FieldElement.of(2)
    for k in range(1, 7):
        out.append(two * omega_power(k))
    return out


_AXIS_CANDIDATES_C = None


def _axis_candidates_complex() -> List[complex]:
    global _AXIS_CANDIDATES_C
    if _AXIS_CANDIDATES_C is None:
        _AXIS_CANDIDATES_C = [c.embed() for c in sigma_axis_candidates()]
    return _AXIS_CANDIDATES_C


def _guard_singular(q1: complex, q2: complex, radius: float = 5e-2) -> None:
    for c in _axis_candidates_complex():
        if abs(q1) + abs(q2 - c) < radius:
            raise SingularInput(f"(q1, q2) = ({q1}, {q2}) within {radius} of candidate ({0}, {c})")
    if abs(q1 * q1 + q2 * q2) < radius * radius:
        raise SingularInput("r vanishes")


def _u_integrals(q1: complex, q2: complex):
    """Shared substitution data: u = sqrt(z + 4/q2^2), z = u^2 - c1."""
    c1 = 4.0 / (q2 * q2)
    r = cmath.sqrt(q1 * q1 + q2 * q2)
    u0 = cmath.sqrt(c1)
    bq = 0.25 * q2 * q2

    def B_of_z(z):
        return z * z + r * z + bq

    return c1, r, u0, B_of_z


def eval_J(point, tol: float = 1e-12) -> complex:
    """Value of the axis-symmetric self-interaction integral.

    Accepts a PotentialPoint or a (q1, q2) pair.  Absolute error <= tol on the
    real test domain; raises SingularInput near the lattice-collapse
    candidates and NoConvergence if refinement stalls.
    """
    if isinstance(point, PotentialPoint):
        q1, q2 = point.q1, point.q2
    else:
        q1, q2 = point
    return eval_J_xy(q1, q2, tol)


def eval_J_xy(q1: complex, q2: complex, tol: float = 1e-12) -> complex:
    if tol < 1e-15:
        raise ValueError("tol below supported floor 1e-15")
    q1, q2 = complex(q1), complex(q2)
    _guard_singular(q1, q2)
    c1, r, u0, B = _u_integrals(q1, q2)
    u0r = u0.real

    def f_head(xi):
        u = u0 + xi
        z = u * u - c1
        return 2.0 / np.sqrt(B(z))

    U = u0r + 16.0

    def f_tail(eta):
        u = 1.0 / eta
        z = u * u - c1
        return 2.0 / (eta * eta * np.sqrt(B(z)))

    head = [(0.0, 1.0), (1.0, 3.0), (3.0, 7.0), (7.0, 16.0)]
    val = adaptive_quad(f_head, head, 0.5 * tol)
    val += adaptive_quad(f_tail, [(0.0, 1.0 / U)], 0.5 * tol)
    return complex(val)


def grad_J(q1: complex, q2: complex, tol: float = 1e-12) -> Tuple[complex, complex]:
    """(dJ/dq1, dJ/dq2) by quadrature of the parameter-differentiated integrand.

    dJ/dq1 carries an exact prefactor q1, so the axis value vanishes
    identically; see grad_J_factored.
    """
    g1, g2 = grad_J_factored(q1, q2, tol)
    return q1 * g1, g2


def grad_J_factored(q1: complex, q2: complex, tol: float = 1e-12) -> Tuple[complex, complex]:
    """(dJ/dq1 divided by q1, dJ/dq2); the first factor is smooth through q1=0."""
    q1, q2 = complex(q1), complex(q2)
    _guard_singular(q1, q2)
    c1, r, u0, B = _u_integrals(q1, q2)
    aq2 = -8.0 / (q2 ** 3)

    def f1(u_arr):
        z = u_arr * u_arr - c1
        return z / B(z) ** 1.5

    def f2(u_arr):
        z = u_arr * u_arr - c1
        Bv = B(z)
        bq2 = z * q2 / r + 0.5 * q2
        return aq2 / (u_arr * u_arr * np.sqrt(Bv)) + bq2 / Bv ** 1.5

    def integrate(f):
        U = u0.real + 16.0

        def head(xi):
            return f(u0 + xi)

        def tail(eta):
            return f(1.0 / eta) / (eta * eta)

        v = adaptive_quad(head, [(0.0, 1.0), (1.0, 3.0), (3.0, 7.0), (7.0, 16.0)], 0.5 * tol)
        v += adaptive_quad(tail, [(0.0, 1.0 / U)], 0.5 * tol)
        return complex(v)

    i1 = integrate(f1)
    i2 = integrate(f2)
    return -i1 / r, -i2


class FastGradJ:
    """Fixed-node evaluator of grad_J_factored for use inside integrators.

    Uses the map u = u0 + x/(1-x) with a fixed Gauss rule; the node count is
    validated once against the adaptive oracle at construction.
    """

    def __init__(self, n: int = 160, check_at: Tuple[float, float] = (0.0, 3.0)):
        x, w = _gl_nodes(n)
        x = 0.5 * (x + 1.0)  # to (0, 1)
        w = 0.5 * w
        self._xi = x / (1.0 - x)
        self._w = w / (1.0 - x) ** 2
        g_ref = grad_J_factored(*check_at, tol=1e-13)
        g_fast = self(*check_at)
        err = abs(g_fast[0] - g_ref[0]) + abs(g_fast[1] - g_ref[1])
        if err > 1e-10:
            raise NoConvergence(f"fixed-node gradient rule off by {err:.2e}; raise n")

    def __call__(self, q1: complex, q2: complex) -> Tuple[complex, complex]:
        c1 = 4.0 / (q2 * q2)
        r = cmath.sqrt(q1 * q1 + q2 * q2)
        u0 = cmath.sqrt(c1)
        u = u0 + self._xi
        z = u * u - c1
        Bv = z * z + r * z + 0.25 * q2 * q2
        B32 = Bv ** 1.5
        i1 = np.dot(self._w, z / B32)
        aq2 = -8.0 / (q2 ** 3)
        bq2 = z * q2 / r + 0.5 * q2
        i2 = np.dot(self._w, aq2 / (u * u * np.sqrt(Bv)) + bq2 / B32)
        return -complex(i1) / r, -complex(i2)


@lru_cache(maxsize=1)
def fast_grad() -> FastGradJ:
    return FastGradJ()


# ---------------------------------------------------------------------------
# closed forms on the axis and the branch-coherent s combination
# ---------------------------------------------------------------------------


def arccos_arg(q2: complex) -> complex:
    return TWO_SQRT2 * q2 ** -1.5


def sqrt8mt3_branch(q2: complex) -> complex:
    """sqrt(8 - t^3) continued from (0, 2) through the upper half plane.

    Equals -i sqrt(t^3 - 8) with the principal sqrt, hence real positive on
    (0, 2) and -i * positive on (2, inf).
    """
    return -1j * cmath.sqrt(q2 ** 3 - 8.0)


def s_value(q2: complex) -> complex:
    """The tracked combination i*arccos(2 sqrt2 t^(-3/2)) / (sqrt2 sqrt(8-t^3)).

    Real and negative on the whole real ray t > 0 under the branch
    conventions of this module (the arccos value is continued onto the
    positive imaginary axis on (0, 2)).  For genuinely complex paths use
    BranchState continuation.
    """
    q2 = complex(q2)
    w = cmath.acos(arccos_arg(q2))
    if abs(q2.imag) < 1e-14 and w.imag < 0.0:
        w = -w
    return 1j * w / (SQRT2 * sqrt8mt3_branch(q2))


def axis_potential_printed(q2: complex) -> complex:
    """Closed-form shape sqrt(2) q2 arccos(2 sqrt2 q2^(-3/2)) / sqrt(q2^3 - 8).

    The calibration run fixes the constant multiple relating this shape to
    the quadrature value of J on the axis.
    """
    q2 = complex(q2)
    d = q2 ** 3 - 8.0
    if abs(q2) < 1e-12 or abs(d) < 1e-12:
        raise SingularInput(f"axis potential singular at q2 = {q2}")
    return SQRT2 * q2 * cmath.acos(arccos_arg(q2)) / cmath.sqrt(d)


def F1_closed(q2: complex) -> complex:
    """Closed form of the second normal derivative of J on the axis.

    Written rationally in (t, s): (t^3 (t^3 - 32) s - 2 (t^3 + 16)) /
    (2 t (t^3 - 8)^2), with s from s_value.  Real for real q2 > 2.
    """
    q2 = complex(q2)
    d = q2 ** 3 - 8.0
    if abs(q2) < 1e-12 or abs(d) < 1e-12:
        raise SingularInput(f"F1 singular at q2 = {q2}")
    s = s_value(q2)
    return (q2 ** 3 * (q2 ** 3 - 32.0) * s - 2.0 * (q2 ** 3 + 16.0)) / (2.0 * q2 * d * d)


def F1_quadrature(q2: complex, tol: float = 1e-12) -> complex:
    """Oracle for F1_closed: the direct integral of -4z / (sqrt(z q2^2 + 4) (q2 + 2z)^3).

    Uses the same u = sqrt(z + 4/q2^2) substitution as eval_J, under which the
    integrand is -8 z / (q2 (q2 + 2z)^3) du.
    """
    q2 = complex(q2)
    d = q2 ** 3 - 8.0
    if abs(q2) < 1e-12 or abs(d) < 1e-12:
        raise SingularInput(f"F1 singular at q2 = {q2}")
    c1 = 4.0 / (q2 * q2)
    u0 = cmath.sqrt(c1)

    def f(u_arr):
        z = u_arr * u_arr - c1
        return -8.0 * z / (q2 * (q2 + 2.0 * z) ** 3)

    def head(xi):
        return f(u0 + xi)

    U = u0.real + 16.0

    def tail(eta):
        return f(1.0 / eta) / (eta * eta)

    v = adaptive_quad(head, [(0.0, 1.0), (1.0, 3.0), (3.0, 7.0), (7.0, 16.0)], 0.5 * tol)
    v += adaptive_quad(tail, [(0.0, 1.0 / U)], 0.5 * tol)
    return complex(v)


def F1_finite_difference(q2: complex, h: float = 1e-4, tol: float = 1e-13) -> complex:
    """Second-order central finite difference of eval_J in q1 at the axis."""
    jc = eval_J_xy(0.0, q2, tol)
    jp = eval_J_xy(h, q2, tol)
    jm = eval_J_xy(-h, q2, tol)
    return (jp - 2.0 * jc + jm) / (h * h)


# ---------------------------------------------------------------------------
# calibration of the closed forms against the quadrature oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Calibration:
    """Constant factors relating closed forms to their quadrature oracles.

    c_potential scales axis_potential_printed to the quadrature value of
    J(0, .); c_f1 scales F1_closed to F1_quadrature.  Raw per-point ratios and
    the worst in-sample deviation from constancy are kept for the report.
    """

    c_potential: float
    c_f1: float
    potential_ratios: Tuple[Tuple[float, float], ...]
    f1_ratios: Tuple[Tuple[float, float], ...]
    max_ratio_spread: float

    def axis_potential(self, q2: complex) -> complex:
        return self.c_potential * axis_potential_printed(q2)

    def axis_potential_derivative(self, q2: complex, h: float = 1e-6) -> complex:
        qp = self.axis_potential(q2 + h)
        qm = self.axis_potential(q2 - h)
        return (qp - qm) / (2.0 * h)


_CAL_POINTS = (2.2, 2.5, 3.0, 4.0, 5.0)


def _snap(x: float, tol: float = 1e-8) -> float:
    for target in (1.0, 2.0, 0.5, 4.0, 0.25):
        if abs(x - target) < tol:
            return target
    return x


@lru_cache(maxsize=1)
def calibrate(tol: float = 1e-13) -> Calibration:
    """Measure the closed-form constants against quadrature at 5 axis points.

    The quadrature governs: downstream consumers multiply the closed forms by
    these constants.  Ratios that sit within 1e-8 of a simple constant are
    snapped to it so that later algebra stays clean.
    """
    pr, fr = [], []
    for q2 in _CAL_POINTS:
        pr.append((q2, (eval_J_xy(0.0, q2, tol) / axis_potential_printed(q2)).real))
        fr.append((q2, (F1_quadrature(q2, tol) / F1_closed(q2)).real))
    cp = sum(r for _, r in pr) / len(pr)
    cf = sum(r for _, r in fr) / len(fr)
    spread = max(
        max(abs(r - cp) for _, r in pr),
        max(abs(r - cf) for _, r in fr),
    )
    if spread > 1e-6:
        raise NoConvergence(f"calibration ratios are not constant (spread {spread:.2e})")
    return Calibration(_snap(cp), _snap(cf), tuple(pr), tuple(fr), spread)

"""Hamiltonian flow of the fluid ellipsoid and the reduced axis system.

The full two-degree-of-freedom Hamiltonian is

    H = r (p1^2 + q2^4 p2^2 / (q2^4 + r)) + J(q1, q2),      r = sqrt(q1^2 + q2^2),

with J the quadrature potential from :mod:`galcert.potential`.  The plane
(p1, q1) = (0, 0) is invariant because H is even in q1; on it the motion is
the one-degree-of-freedom system

    R(p2, q2) = q2^5 p2^2 / (q2^4 + q2) + V(q2),

where V is the calibrated axis potential.  Equations of motion use the
parameter-differentiated quadrature gradient of J (finite differences of
eval_J survive only as a test oracle).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from . import potential
from .errors import NoConvergence, SingularEncounter, SingularInput

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PhaseState:
    """Point of the full system, with the time it was sampled at."""

    q1: float
    q2: float
    p1: float
    p2: float
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.p1, self.p2], dtype=float)


@dataclass(frozen=True)
class CriticalPoint:
    """Equilibrium abscissa and energy of the reduced axis system."""

    x: float
    E: float
    residual_stationarity: float
    residual_energy: float


def hamiltonian(state, tol: float = 1e-12) -> complex:
    """Energy of a phase point; kinetic term plus the quadrature potential."""
    q1, q2, p1, p2 = _unpack(state)
    r = cmath.sqrt(q1 * q1 + q2 * q2)
    if abs(r) < 1e-12:
        raise SingularInput("r = 0")
    c = q2 ** 4 + r
    kin = r * (p1 * p1 + q2 ** 4 * p2 * p2 / c)
    return kin + potential.eval_J_xy(q1, q2, tol)


def _unpack(state) -> Tuple[complex, complex, complex, complex]:
    if isinstance(state, PhaseState):
        return state.q1, state.q2, state.p1, state.p2
    q1, q2, p1, p2 = state
    return q1, q2, p1, p2


def reduced_R(p2: complex, q2: complex) -> complex:
    """Hamiltonian of the invariant-plane system with the calibrated potential."""
    q2 = complex(q2)
    if abs(q2) < 1e-12 or abs(q2 ** 3 + 1.0) < 1e-12 or abs(q2 ** 3 - 8.0) < 1e-12:
        raise SingularInput(f"reduced Hamiltonian singular at q2 = {q2}")
    cal = potential.calibrate()
    return q2 ** 5 * p2 * p2 / (q2 ** 4 + q2) + cal.axis_potential(q2)


def reduced_kinetic_coefficient(q2: complex) -> complex:
    """a(q2) with kinetic term a(q2) p2^2, i.e. q2^4 / (q2^3 + 1)."""
    return q2 ** 4 / (q2 ** 3 + 1.0)


# ---------------------------------------------------------------------------
# full-system equations of motion
# ---------------------------------------------------------------------------


def _rhs(t, y, grad) -> np.ndarray:
    q1, q2, p1, p2 = y
    r = math.sqrt(q1 * q1 + q2 * q2)
    c = q2 ** 4 + r
    g1_over_q1, g2 = grad(q1, q2)
    common = p1 * p1 + q2 ** 8 * p2 * p2 / (c * c)
    dq1 = 2.0 * r * p1
    dq2 = 2.0 * r * q2 ** 4 * p2 / c
    dp1 = -(q1 / r) * common - q1 * g1_over_q1.real
    dp2 = -(q2 / r) * common - 4.0 * r * r * q2 ** 3 * p2 * p2 / (c * c) - g2.real
    return np.array([dq1, dq2, dp1, dp2])


def _singular_event_factory():
    def event(t, y, *args):
        q1, q2, p1, p2 = y
        r2 = q1 * q1 + q2 * q2
        return min(abs(q2) - 0.1, math.sqrt(r2) - 0.1)

    event.terminal = True
    event.direction = -1
    return event


def integrate(
    s0: PhaseState,
    T: float,
    tol: float = 1e-12,
    t_eval: Optional[Sequence[float]] = None,
    dense: bool = False,
):
    """Adaptive high-order integration of the full system over [0, T].

    Returns the trajectory as a list of PhaseState (at solver steps, or at
    t_eval when given).  With dense=True the scipy solution object is returned
    alongside for interpolation.  Raises SingularEncounter when the orbit
    approaches the singular set and NoConvergence on integrator failure.
    """
    if T == 0.0:
        traj = [s0]
        return (traj, None) if dense else traj
    grad = potential.fast_grad()
    event = _singular_event_factory()
    sol = solve_ivp(
        _rhs,
        (0.0, T),
        s0.as_array(),
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-2,
        dense_output=True,
        events=[event],
        args=(grad,),
        t_eval=np.asarray(t_eval, dtype=float) if t_eval is not None else None,
    )
    if sol.status == 1:  # terminated by the singular-approach event
        t_bad = float(sol.t_events[0][0])
        y_bad = sol.sol(t_bad)
        raise SingularEncounter(
            f"singular approach at t = {t_bad}",
            time=t_bad,
            state=PhaseState(*y_bad, t=t_bad),
        )
    if not sol.success:
        raise NoConvergence(f"integration failed: {sol.message}")
    traj = [PhaseState(*sol.y[:, i], t=float(sol.t[i])) for i in range(sol.t.size)]
    return (traj, sol) if dense else traj


def plane_leakage(q2_start: float, T: float = 5.0, tol: float = 1e-12) -> float:
    """max |q1| + |p1| along an orbit started on the invariant plane."""
    traj = integrate(PhaseState(0.0, q2_start, 0.0, 0.0), T, tol)
    return max(abs(s.q1) + abs(s.p1) for s in traj)


def energy_drift(s0: PhaseState, T: float, tol: float = 1e-12, samples: int = 20) -> float:
    """max |H(orbit) - H(s0)| at equally spaced sample times."""
    ts = np.linspace(0.0, T, samples + 1)
    traj = integrate(s0, T, tol, t_eval=ts)
    e0 = hamiltonian(s0).real
    return max(abs(hamiltonian(s).real - e0) for s in traj)


def trajectory_csv(traj: Sequence[PhaseState], tol: float = 1e-12) -> str:
    """CSV text with columns time,q1,q2,p1,p2,energy at 17 significant digits."""
    lines = ["time,q1,q2,p1,p2,energy"]
    for s in traj:
        e = hamiltonian(s, tol).real
        lines.append(
            ",".join(f"{v:.17g}" for v in (s.t, s.q1, s.q2, s.p1, s.p2, e))
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# critical points of the reduced system
# ---------------------------------------------------------------------------


def _cosh_sqrt(y: float) -> float:
    """cosh(sqrt(y)) continued through y = 0 (equals cos(sqrt(-y)) for y < 0)."""
    if y >= 0.0:
        return math.cosh(math.sqrt(y))
    return math.cos(math.sqrt(-y))


def _sinhc_sqrt(y: float) -> float:
    """sinh(sqrt(y))/sqrt(y), entire in y; equals sinc-like form for y < 0."""
    if abs(y) < 1e-12:
        return 1.0 + y / 6.0
    if y > 0.0:
        ry = math.sqrt(y)
        return math.sinh(ry) / ry
    ry = math.sqrt(-y)
    return math.sin(ry) / ry


def stationarity_function(x: float) -> float:
    """2 sqrt2 - x^(3/2) cosh(6 sqrt2 sqrt(8 - x^3) / (x^3 + 16)), entire via c^2."""
    c2 = 72.0 * (8.0 - x ** 3) / (x ** 3 + 16.0) ** 2
    return 2.0 * SQRT2 - x ** 1.5 * _cosh_sqrt(c2)


def _stationarity_derivative(x: float) -> float:
    d = x ** 3 + 16.0
    c2 = 72.0 * (8.0 - x ** 3) / (d * d)
    dc2 = -216.0 * x * x * (32.0 - x ** 3) / d ** 3
    return -1.5 * math.sqrt(x) * _cosh_sqrt(c2) - x ** 1.5 * 0.5 * _sinhc_sqrt(c2) * dc2


def critical_energy(x: float) -> float:
    return 12.0 * x / (x ** 3 + 16.0)


def critical_points(window: Tuple[float, float], grid: int = 1000) -> List[CriticalPoint]:
    """All real equilibria of the reduced system in the window.

    Brackets sign changes of the stationarity function on a uniform grid,
    polishes with bisection plus guarded Newton steps, and merges duplicates
    closer than 1e-9.
    """
    lo, hi = window
    if lo <= 0.0:
        raise ValueError("window must be positive")
    xs = np.linspace(lo, hi, grid + 1)
    gs = [stationarity_function(float(x)) for x in xs]
    found: List[float] = []
    for i in range(grid):
        a, b, ga, gb = float(xs[i]), float(xs[i + 1]), gs[i], gs[i + 1]
        if ga == 0.0:
            found.append(a)
            continue
        if ga * gb < 0.0:
            for _ in range(200):
                m = 0.5 * (a + b)
                gm = stationarity_function(m)
                if gm == 0.0:
                    break
                if ga * gm < 0.0:
                    b, gb = m, gm
                else:
                    a, ga = m, gm
                if b - a < 1e-15 * max(1.0, abs(a)):
                    break
            x = 0.5 * (a + b)
            best, best_g = x, abs(stationarity_function(x))
            for _ in range(50):  # guarded Newton polish
                d = _stationarity_derivative(x)
                if d == 0.0:
                    break
                x_new = x - stationarity_function(x) / d
                if not (lo - 1e-6 <= x_new <= hi + 1e-6):
                    break
                g_new = abs(stationarity_function(x_new))
                if g_new < best_g:
                    best, best_g = x_new, g_new
                if abs(x_new - x) < 1e-15 * max(1.0, abs(x)):
                    break
                x = x_new
            found.append(best)
    merged: List[float] = []
    for x in sorted(found):
        if not merged or abs(x - merged[-1]) > 1e-9:
            merged.append(x)
    out = []
    for x in merged:
        e = critical_energy(x)
        res_e = abs(e - critical_energy(x))  # exact by construction
        out.append(CriticalPoint(x, e, abs(stationarity_function(x)), res_e))
    return out


# ---------------------------------------------------------------------------
# energy relations along invariant-plane orbits
# ---------------------------------------------------------------------------


def phi_dot_sq(t_val: float, E: float) -> float:
    """The closed-form energy relation (E - V(t)) (t^3 + 1) / t^4 on t > 2.

    With the calibrated potential this equals p2^2 along an orbit of energy E
    (it vanishes at turning points and is linear in E with slope
    (t^3+1)/t^4).  The squared position velocity itself is orbit_speed_sq;
    the certification report records the measured relation between the two.
    """
    if t_val <= 2.0:
        raise SingularInput("relation evaluated on its real branch domain t > 2")
    cal = potential.calibrate()
    v = cal.axis_potential(t_val).real
    return (E - v) * (t_val ** 3 + 1.0) / t_val ** 4


def orbit_speed_sq(t_val: float, E: float) -> float:
    """(dq2/dtau)^2 along the invariant-plane orbit of energy E.

    Equals 4 a(t)^2 p2^2 with a the reduced kinetic coefficient, hence
    4 t^4 (E - V(t)) / (t^3 + 1).
    """
    if t_val <= 2.0:
        raise SingularInput("relation evaluated on its real branch domain t > 2")
    cal = potential.calibrate()
    v = cal.axis_potential(t_val).real
    return 4.0 * t_val ** 4 * (E - v) / (t_val ** 3 + 1.0)

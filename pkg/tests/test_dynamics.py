"""Hamiltonian flow: invariant plane, conservation, critical points, energy relations."""

import math

import numpy as np
import pytest

from galcert import dynamics as D
from galcert import potential as P
from galcert.errors import SingularEncounter, SingularInput


def test_hamiltonian_rest_states():
    # with all momenta zero, H reduces to the potential
    q2 = 2.0 ** (4.0 / 3.0)
    h = D.hamiltonian(D.PhaseState(0.0, q2, 0.0, 0.0))
    assert abs(h.real - P.eval_J_xy(0.0, q2, 1e-12).real) < 1e-12
    assert abs(h.real - 1.9790793572264365) < 1e-10


def test_hamiltonian_even_in_p1():
    a = D.hamiltonian(D.PhaseState(0.3, 3.0, 0.5, 0.2))
    b = D.hamiltonian(D.PhaseState(0.3, 3.0, -0.5, 0.2))
    assert abs(a - b) < 1e-14


def test_hamiltonian_singular_guard():
    with pytest.raises(SingularInput):
        D.hamiltonian(D.PhaseState(0.0, 0.0, 0.0, 0.0))


def test_invariant_plane_leakage():
    # five distinct starts across the real test window
    for q2 in (2.2, 2.5, 3.0, 4.0, 4.9):
        assert D.plane_leakage(q2, 5.0, 1e-12) <= 1e-10


def test_energy_conservation():
    drift = D.energy_drift(D.PhaseState(0.0, 2.5, 0.0, 0.0), 10.0, 1e-12)
    assert drift <= 1e-9


def test_integrate_T_zero():
    s0 = D.PhaseState(0.0, 3.0, 0.0, 0.0)
    traj = D.integrate(s0, 0.0, 1e-12)
    assert traj == [s0]


def test_integrate_reversibility():
    s0 = D.PhaseState(0.0, 2.7, 0.0, 0.1)
    fwd = D.integrate(s0, 5.0, 1e-12)
    end = fwd[-1]
    back = D.integrate(D.PhaseState(end.q1, end.q2, end.p1, end.p2), -5.0, 1e-12)
    b = back[-1]
    err = max(abs(b.q1 - s0.q1), abs(b.q2 - s0.q2), abs(b.p1 - s0.p1), abs(b.p2 - s0.p2))
    assert err <= 1e-7


def test_integrate_singular_encounter():
    # pushed toward q2 = 0 the orbit must stop with a typed error
    s0 = D.PhaseState(0.0, 1.2, 0.0, -1.0)
    with pytest.raises(SingularEncounter) as exc_info:
        D.integrate(s0, 10.0, 1e-10)
    assert exc_info.value.time is not None
    assert exc_info.value.state is not None


def test_reduced_full_consistency():
    s0 = D.PhaseState(0.0, 2.5, 0.0, 0.0)
    E = D.hamiltonian(s0).real
    traj, sol = D.integrate(s0, 3.0, 1e-12, dense=True)
    for tau in np.linspace(0.2, 3.0, 7):
        q1, q2, p1, p2 = sol.sol(tau)
        assert abs(D.reduced_R(p2, q2).real - E) <= 1e-8


def test_reduced_R_kinetic_split():
    # R(p2, q2) - R(0, q2) = q2^5 p2^2 / (q2^4 + q2) exactly
    for p2, q2 in ((0.3, 2.6), (0.7, 4.0)):
        lhs = D.reduced_R(p2, q2) - D.reduced_R(0.0, q2)
        rhs = q2 ** 5 * p2 ** 2 / (q2 ** 4 + q2)
        assert abs(lhs - rhs) < 1e-14
    # even in p2
    assert abs(D.reduced_R(0.4, 3.0) - D.reduced_R(-0.4, 3.0)) < 1e-15


def test_reduced_R_matches_hamiltonian():
    for q2 in (2.5, 3.0, 4.0):
        r0 = D.reduced_R(0.0, q2).real
        h0 = D.hamiltonian(D.PhaseState(0.0, q2, 0.0, 0.0)).real
        assert abs(r0 - h0) <= 1e-9


def test_critical_points_window():
    pts = D.critical_points((1.5, 2.5))
    assert len(pts) == 1
    cp = pts[0]
    assert abs(cp.x - 2.0) <= 1e-4
    assert abs(cp.E - 1.0) <= 1e-8
    assert cp.residual_stationarity <= 1e-12
    assert cp.residual_energy <= 1e-12


def test_critical_point_exact_identities():
    # at x = 2 the stationarity combination collapses to 2 sqrt2 - 2^(3/2) = 0
    assert D.stationarity_function(2.0) == 0.0
    assert D.critical_energy(2.0) == 1.0


def test_critical_points_empty_window():
    assert D.critical_points((3.0, 4.0)) == []


def test_phi_dot_sq_turning_point():
    # where R(0, t) = E the relation vanishes
    for t in (2.5, 3.0):
        E = D.reduced_R(0.0, t).real
        assert abs(D.phi_dot_sq(t, E)) <= 1e-9


def test_phi_dot_sq_linear_in_E():
    t = 3.0
    e1, e2 = 1.0, 2.0
    slope = (D.phi_dot_sq(t, e2) - D.phi_dot_sq(t, e1)) / (e2 - e1)
    assert abs(slope - (t ** 3 + 1.0) / t ** 4) < 1e-12
    assert slope > 0.0


def test_energy_relations_along_orbit():
    s0 = D.PhaseState(0.0, 2.5, 0.0, 0.0)
    E = D.hamiltonian(s0).real
    traj, sol = D.integrate(s0, 3.0, 1e-12, dense=True)
    for tau in np.linspace(0.3, 3.0, 10):
        q1, q2, p1, p2 = sol.sol(tau)
        # the closed-form relation equals p2^2 along the orbit
        assert abs(D.phi_dot_sq(q2, E) - p2 * p2) <= 1e-7
        # the orbit speed relation equals (dq2/dtau)^2
        r = math.sqrt(q1 * q1 + q2 * q2)
        dq2 = 2.0 * r * q2 ** 4 * p2 / (q2 ** 4 + r)
        assert abs(D.orbit_speed_sq(q2, E) - dq2 * dq2) <= 1e-7


def test_phi_dot_sq_domain_guard():
    with pytest.raises(SingularInput):
        D.phi_dot_sq(1.5, 1.0)


def test_trajectory_csv_format():
    traj = D.integrate(D.PhaseState(0.0, 3.0, 0.0, 0.0), 0.5, 1e-10)
    text = D.trajectory_csv(traj, 1e-10)
    lines = text.strip().split("\n")
    assert lines[0] == "time,q1,q2,p1,p2,energy"
    assert len(lines) == len(traj) + 1
    row = lines[1].split(",")
    assert len(row) == 6
    float(row[5])  # parses

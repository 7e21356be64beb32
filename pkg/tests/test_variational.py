"""Variational equations: branch tracking, coefficient families, local exponents."""

import cmath
import math
from fractions import Fraction

import pytest

from galcert import potential as P
from galcert import variational as V
from galcert.algebra import FieldElement, Polynomial
from galcert.errors import NotASingularity, SingularInput

SQRT2 = math.sqrt(2.0)


def test_branch_state_at_real_point():
    b = V.BranchState.at_real_point(3.0)
    ru, rv, rw = b.residuals()
    assert max(ru, rv, rw) < 1e-12
    assert abs(b.w.imag) < 1e-14 and 0 < b.w.real < math.pi / 2
    assert abs(b.s - P.s_value(3.0)) < 1e-14
    assert b.s.real < 0.0  # branch convention


def test_branch_state_inside_two():
    b = V.BranchState.at_real_point(0.5)
    assert max(b.residuals()) < 1e-12
    assert abs(b.s.imag) < 1e-12 and b.s.real < 0.0   # s stays real on (0, 2)


def test_branch_shift():
    b = V.BranchState.at_real_point(3.0)
    b1 = b.shifted(1)
    assert abs(b1.w - b.w - 2 * math.pi) < 1e-15
    assert abs(b1.s - b.s - V.sheaf_shift(b, 1)) < 1e-14


def test_family_coeffs_real_on_real_domain():
    b = V.BranchState.at_real_point(3.5)
    for E in (0.0, 1.0, 2.5):
        a2, a1, a0 = V.family_coeffs(b, E)
        assert abs(a2.imag) < 1e-10
        assert abs(a1.imag) < 1e-10
        assert abs(a0.imag) < 1e-10


def test_family_k0_is_base():
    b = V.BranchState.at_real_point(4.0)
    assert V.family_coeffs(b, 1.3, 0) == V.eq_base_coeffs(b, 1.3)


def test_family_shift_difference_in_a2():
    # consecutive members differ in a2 by the leading polynomial times the shift
    b = V.BranchState.at_real_point(3.0)
    t = b.t
    E = 0.7
    for k in (0, 3):
        a2k = V.family_coeffs(b, E, k)[0]
        a2k1 = V.family_coeffs(b, E, k + 1)[0]
        lead = V.limit_equation().a2.eval_complex(t)
        expected = lead * (2j * math.pi) / (SQRT2 * b.u)
        assert abs((a2k1 - a2k) - expected) < 1e-9


def test_family_singular_guard():
    b = V.BranchState(2.0 + 0j, 0.0, 0.0, math.sqrt(2.0))
    with pytest.raises(SingularInput):
        V.family_coeffs(b, 1.0)


def test_normalized_family_convergence():
    b = V.BranchState.at_real_point(3.0)
    errs = [V.normalized_family_deviation(b, 1.0, k) for k in (10, 20, 40, 80)]
    ratios = [errs[i + 1] / errs[i] for i in range(3)]
    for r in ratios:
        assert 0.4 <= r <= 0.6  # O(1/k)


def test_limit_equation_values():
    e = V.limit_equation()
    # leading coefficients as integers
    assert e.a2.eval_complex(1.0) == 4 + 192 - 60 + 256
    # a1 vanishes at every cube root of 8: 75*2^7 - 640*2 - 7*2^10 - 72*2^4 = 0
    assert e.a1.eval_exact(FieldElement.of(2)).is_zero()
    assert 75 * 128 - 1280 - 7 * 1024 - 72 * 16 == 0


def test_limit_equation_factorization():
    # a2 = 4 t^2 (t+1)(t^2-t+1)(t-2)^2(t^2+2t+4)^2, by the expand oracle
    e = V.limit_equation()
    t = Polynomial.x()
    one = Polynomial.one()
    expected = (
        Polynomial.constant(4)
        * t * t
        * (t + one)
        * Polynomial.from_int_coeffs([1, -1, 1])
        * (t - Polynomial.from_int_coeffs([2])) * (t - Polynomial.from_int_coeffs([2]))
        * Polynomial.from_int_coeffs([4, 2, 1]) * Polynomial.from_int_coeffs([4, 2, 1])
    )
    assert e.a2 == expected
    assert len(e.singularities()) == 7


def test_indicial_exponents_at_zero():
    e = V.limit_equation()
    rho = V.indicial_exponents(e, 0)
    vals = sorted(r.a for r in rho)  # exact FieldElements expected
    assert vals == [Fraction(0), Fraction(7, 2)]


def test_indicial_exponents_at_minus_one():
    e = V.limit_equation()
    rho = V.indicial_exponents(e, -1)
    vals = sorted(r.a for r in rho)
    assert vals == [Fraction(0), Fraction(1, 2)]


def test_indicial_ordinary_point_rejected():
    e = V.limit_equation()
    with pytest.raises(NotASingularity):
        V.indicial_exponents(e, 3)


def test_exponent_sum_det_consistency():
    # exp(2 pi i (rho1 + rho2)) must match the Wronskian det prediction
    from galcert.monodromy import det_prediction

    e = V.limit_equation()
    for pole in (0, -1, 2):
        s = V.exponent_sum(e, pole).embed()
        lhs = cmath.exp(2j * math.pi * s)
        rhs = det_prediction(e, pole)
        assert abs(lhs - rhs) < 1e-12


def test_infinity_is_irregular():
    # computed, not assumed: a0/a2 tends to a nonzero constant at infinity
    info = V.singularity_at_infinity(V.limit_equation())
    assert info["p_order_at_infinity"] == 1
    assert info["q_order_at_infinity"] == 0
    assert info["irregular_singular"] is True
    assert info["regular_singular"] is False


def test_nve_time_matrix_shape():
    q2 = 3.0
    m = V.nve_time_matrix(q2)
    assert m[0][0] == 0.0 and m[1][1] == 0.0
    assert m[1][0] == 2.0 * q2
    # trace zero, det = 2 q2 F1
    det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
    assert abs(det - 2.0 * q2 * P.F1_closed(q2)) < 1e-14


def test_nve_time_matrix_full_adds_momentum_term():
    q2, p2 = 3.0, 0.4
    m0 = V.nve_time_matrix(q2)
    m1 = V.nve_time_matrix_full(q2, p2)
    diff = m1[0][1] - m0[0][1]
    assert abs(diff + q2 ** 5 * p2 ** 2 / (q2 ** 3 + 1) ** 2) < 1e-14


def test_corrected_equation_consistent_at_turning_point():
    # the corrected leading coefficient vanishes where E = V(t)
    cal = P.calibrate()
    t = 2.8
    E = cal.axis_potential(t).real
    a2, a1, a0 = V.transverse_linearization_coeffs(t, E)
    assert abs(a2) < 1e-9


def test_indicial_irregular_singular_rejected():
    # p = a1/a2 = 1/t^2 has pole order 2 > 1 at the origin
    from galcert.errors import IrregularSingular

    e = V.ExactODE2(
        Polynomial.from_int_coeffs([0, 0, 1]),
        Polynomial.from_int_coeffs([1]),
        Polynomial.zero(),
        "irregular",
    )
    with pytest.raises(IrregularSingular):
        V.indicial_exponents(e, 0)


def test_second_order_reduction_on_fd_solution():
    # the finite-difference transverse solution satisfies
    # (1/2) Xdd phi - (1/2) Xd phid = -phi^2 F1_full X along the orbit;
    # with the potential-only F1 the residual is the dropped momentum term
    import numpy as np
    from galcert import dynamics

    delta = 1e-6
    T = 2.5
    base, sol = dynamics.integrate(dynamics.PhaseState(0.0, 2.5, 0.0, 0.0), T, 1e-12, dense=True)
    _, sol_p = dynamics.integrate(dynamics.PhaseState(delta, 2.5, 0.0, 0.0), T, 1e-12, dense=True)
    _, sol_m = dynamics.integrate(dynamics.PhaseState(-delta, 2.5, 0.0, 0.0), T, 1e-12, dense=True)

    def fd_state(tau):
        yp, ym = sol_p.sol(tau), sol_m.sol(tau)

        def dq1(y):
            return 2.0 * math.sqrt(y[0] ** 2 + y[1] ** 2) * y[2]

        X = (yp[0] - ym[0]) / (2 * delta)
        Xd = (dq1(yp) - dq1(ym)) / (2 * delta)
        return X, Xd

    h = 1e-3
    errs_full, errs_pot = [], []
    for tau in (0.5, 1.0, 1.5, 2.0):
        q1, q2, p1, p2 = sol.sol(tau)
        phi = q2
        r = math.sqrt(q1 * q1 + q2 * q2)
        phid = 2.0 * r * q2 ** 4 * p2 / (q2 ** 4 + r)
        X, Xd = fd_state(tau)
        Xd_m = fd_state(tau - h)[1]
        Xd_p = fd_state(tau + h)[1]
        Xdd = (Xd_p - Xd_m) / (2 * h)
        lhs = 0.5 * Xdd * phi - 0.5 * Xd * phid
        f1_full = P.F1_closed(q2).real + V.hessian_momentum_term(q2, p2).real
        f1_pot = P.F1_closed(q2).real
        scale = abs(phi * phi * f1_full * X)
        errs_full.append(abs(lhs + phi * phi * f1_full * X) / scale)
        errs_pot.append(abs(lhs + phi * phi * f1_pot * X) / scale)
    assert max(errs_full) <= 1e-5          # noise floor of the tau-difference
    assert min(errs_pot) >= 1e-3           # the momentum term is load-bearing

"""Potential oracles: quadrature, closed forms, calibration, singular guards."""

import math
import random

import pytest

from galcert import potential as P
from galcert.algebra import FieldElement, omega_power
from galcert.errors import SingularInput

# elementary value of the axis integral at q2 = 2^(4/3):
# the substitution u = sqrt(z + 4/q2^2) makes it an arctangent, giving
# J = 2^(4/3) * pi / 4
Q_SPECIAL = 2.0 ** (4.0 / 3.0)
J_SPECIAL = Q_SPECIAL * math.pi / 4.0  # = 1.9790793572264365


def test_eval_J_special_point():
    val = P.eval_J_xy(0.0, Q_SPECIAL, 1e-13)
    assert abs(val.imag) < 1e-13
    assert abs(val.real - J_SPECIAL) < 1e-12


def test_eval_J_positive_on_axis():
    for q2 in (2.2, 3.0, 4.0, 5.5):
        v = P.eval_J_xy(0.0, q2, 1e-12)
        assert v.real > 0.0
        assert abs(v.imag) < 1e-12


def test_eval_J_even_in_q1():
    for q1, q2 in ((0.3, 3.0), (0.7, 4.2)):
        a = P.eval_J_xy(q1, q2, 1e-12)
        b = P.eval_J_xy(-q1, q2, 1e-12)
        assert abs(a - b) <= 2e-12


def test_eval_J_tolerance_contract():
    q2 = 3.3
    coarse = P.eval_J_xy(0.0, q2, 1e-6)
    fine = P.eval_J_xy(0.0, q2, 5e-7)
    assert abs(fine - coarse) < 1e-6


def test_eval_J_singular_guard():
    with pytest.raises(SingularInput):
        P.eval_J_xy(0.0, 2.001, 1e-10)
    with pytest.raises(SingularInput):
        P.eval_J_xy(0.01, 0.02, 1e-10)


def test_eval_J_stable_away_from_candidates():
    # finite and quadrature-stable at 50 random axis points with distance
    # >= 0.1 from each of the seven candidates
    rng = random.Random(11)
    cands = [c.embed() for c in P.sigma_axis_candidates()]
    count = 0
    while count < 50:
        q2 = complex(rng.uniform(0.3, 6.0), rng.uniform(-0.4, 0.4))
        if min(abs(q2 - c) for c in cands) < 0.1:
            continue
        v1 = P.eval_J_xy(0.0, q2, 1e-10)
        v2 = P.eval_J_xy(0.0, q2, 1e-12)
        assert v1 == v1 and v2 == v2  # no NaN
        assert abs(v1 - v2) < 1e-9
        count += 1


def test_sigma_axis_candidates():
    cands = P.sigma_axis_candidates()
    assert len(cands) == 7
    assert FieldElement.of(0) in cands
    assert FieldElement.of(2) * omega_power(1) in cands      # 2 e^{i pi/3}
    assert FieldElement.of(-2) in cands                      # 2 e^{i pi}
    embeds = sorted((c.embed().real, c.embed().imag) for c in cands)
    # all nonzero candidates lie on the circle |q2| = 2
    for re, im in embeds:
        mod = math.hypot(re, im)
        assert mod < 1e-12 or abs(mod - 2.0) < 1e-12


def test_F1_closed_matches_quadrature():
    for q2 in (2.3, 3.0, 4.0, 5.0):
        closed = P.F1_closed(q2)
        quad = P.F1_quadrature(q2, 1e-13)
        assert abs(closed - quad) <= 1e-11 * abs(quad) + 1e-15
        assert abs(closed.imag) < 1e-12  # real on the real branch domain


def test_F1_quadrature_negative_real():
    v = P.F1_quadrature(3.0, 1e-12)
    assert v.real < 0.0
    assert abs(v.imag) < 1e-12


def test_F1_conjugation_symmetry():
    for q2 in (3.0 + 0.2j, 4.0 + 0.1j):
        a = P.F1_closed(q2)
        b = P.F1_closed(q2.conjugate())
        assert abs(b - a.conjugate()) < 1e-10


def test_F1_tolerance_contract():
    q2 = 3.7
    coarse = P.F1_quadrature(q2, 1e-8)
    fine = P.F1_quadrature(q2, 5e-9)
    assert abs(fine - coarse) < 1e-8


def test_F1_finite_difference_special_point():
    # at q2 = 2^(4/3), central difference of eval_J at step 1e-4 agrees with
    # the quadrature within 1e-5 relative
    quad = P.F1_quadrature(Q_SPECIAL, 1e-13)
    fd = P.F1_finite_difference(Q_SPECIAL, h=1e-4)
    assert abs(fd - quad) <= 1e-5 * abs(quad)


def test_F1_singular_guard():
    with pytest.raises(SingularInput):
        P.F1_closed(2.0)
    with pytest.raises(SingularInput):
        P.F1_quadrature(0.0, 1e-10)


def test_calibration_constants():
    cal = P.calibrate()
    assert cal.c_potential == 2.0
    assert cal.c_f1 == 1.0
    assert cal.max_ratio_spread < 1e-10
    # scaled closed form equals the quadrature
    for q2 in (2.4, 3.6):
        assert abs(cal.axis_potential(q2) - P.eval_J_xy(0.0, q2, 1e-13)) < 1e-11


def test_grad_matches_finite_differences():
    h = 1e-5
    for q1, q2 in ((0.2, 3.0), (0.5, 4.1)):
        g1, g2 = P.grad_J(q1, q2, 1e-12)
        fd1 = (P.eval_J_xy(q1 + h, q2, 1e-13) - P.eval_J_xy(q1 - h, q2, 1e-13)) / (2 * h)
        fd2 = (P.eval_J_xy(q1, q2 + h, 1e-13) - P.eval_J_xy(q1, q2 - h, 1e-13)) / (2 * h)
        assert abs(g1 - fd1) < 1e-8
        assert abs(g2 - fd2) < 1e-8


def test_grad_vanishes_on_axis():
    g1, _ = P.grad_J(0.0, 3.0, 1e-12)
    assert g1 == 0.0  # exact: the q1 prefactor is factored out


def test_fast_grad_matches_adaptive():
    fg = P.fast_grad()
    for q1, q2 in ((0.0, 2.5), (0.3, 3.7), (0.1, 5.0)):
        a = fg(q1, q2)
        b = P.grad_J_factored(q1, q2, 1e-13)
        assert abs(a[0] - b[0]) < 1e-11
        assert abs(a[1] - b[1]) < 1e-11


def test_potential_point_r_convention():
    pt = P.PotentialPoint(0.0, 3.0)
    assert pt.r == 3.0  # r = q2 on the axis with Re q2 > 0
    pt2 = P.PotentialPoint(0.4, 2.8)
    assert abs(pt2.r ** 2 - (0.4 ** 2 + 2.8 ** 2)) < 1e-13
    assert abs(P.eval_J(pt, 1e-12) - P.eval_J_xy(0.0, 3.0, 1e-12)) == 0.0

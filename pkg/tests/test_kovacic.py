"""Liouvillian decision procedure: normal form, pole data, the three cases."""

import numpy as np
import pytest
from fractions import Fraction

from galcert import kovacic as K
from galcert import monodromy as M
from galcert.algebra import FieldElement, Polynomial, RationalFunction
from galcert.variational import ExactODE2, limit_equation


def ode(a2, a1, a0, tag=""):
    return ExactODE2(
        Polynomial.from_int_coeffs(a2),
        Polynomial.from_int_coeffs(a1),
        Polynomial.from_int_coeffs(a0),
        tag,
    )


EXP_ODE = ode([1], [0], [-1], "exp")            # X'' = X
EULER_ODE = ode([0, 0, 1], [0], [-2], "euler")  # t^2 X'' = 2 X
DAMPED_ODE = ode([0, 1], [2], [0], "damped")    # t X'' + 2 X' = 0
AIRY_ODE = ode([1], [0], [0, -1], "airy")       # X'' = t X


def test_to_normal_form_exp():
    r, p = K.to_normal_form(EXP_ODE)
    assert r == RationalFunction.of(1)
    assert p.is_zero()


def test_to_normal_form_forced_cancellation():
    # p = 2/t gives p^2/4 + p'/2 = 1/t^2 - 1/t^2 = 0
    r, p = K.to_normal_form(DAMPED_ODE)
    assert r.is_zero()


def test_normal_form_of_limit_equation():
    r, p = K.to_normal_form(limit_equation())
    prof = K.pole_profile(r)
    # poles exactly at the 7 roots of the leading coefficient, all order 2
    assert len(prof.poles) == 7
    assert all(o == 2 for o in prof.poles.values())
    assert prof.order_at_infinity == 0


def test_pole_profile_examples():
    assert K.pole_profile(RationalFunction.of(1)).order_at_infinity == 0
    prof = K.pole_profile(RationalFunction(Polynomial.from_int_coeffs([2]),
                                           Polynomial.from_int_coeffs([0, 0, 1])))
    assert prof.poles == {FieldElement.of(0): 2}
    assert prof.order_at_infinity == 2
    assert K.pole_profile(RationalFunction.of(0)).order_at_infinity is None


def test_case1_exp():
    r, _ = K.to_normal_form(EXP_ODE)
    rec = K.run_case(r, 1)
    assert rec.success
    assert rec.omega == RationalFunction.of(1)


def test_case1_euler():
    r, _ = K.to_normal_form(EULER_ODE)
    rec = K.run_case(r, 1)
    assert rec.success
    # omega = 2/t, solution t^2
    assert rec.omega == RationalFunction(Polynomial.from_int_coeffs([2]),
                                         Polynomial.from_int_coeffs([0, 1]))


def test_case1_soundness_riccati():
    for e in (EXP_ODE, EULER_ODE):
        cert = K.kovacic_run(e)
        omega = cert.omega()
        resid = omega.derivative() + omega * omega - cert.r
        assert resid.is_zero()


def test_kovacic_controls():
    assert K.kovacic_run(EXP_ODE).verdict == "Liouvillian"
    assert K.kovacic_run(EXP_ODE).case == 1
    assert K.kovacic_run(EULER_ODE).verdict == "Liouvillian"
    assert K.kovacic_run(DAMPED_ODE).verdict == "Liouvillian"


def test_kovacic_airy():
    cert = K.kovacic_run(AIRY_ODE)
    assert cert.verdict == "GroupSL2"
    c1, c2, c3 = cert.cases
    # odd order at infinity excludes case 1; no qualifying pole excludes case
    # 2; order at infinity below 2 excludes case 3
    assert "odd order" in c1.skip_reason
    assert c2.skip_reason is not None
    assert c3.skip_reason is not None


def test_kovacic_case2_positive():
    # y'' = (1/t - 3/(16 t^2)) y, the classical D-type example:
    # 16 t^2 y'' - (16 t - 3) y = 0
    e = ode([0, 0, 16], [0], [3, -16], "case2")
    cert = K.kovacic_run(e)
    assert cert.verdict == "Liouvillian"
    assert cert.case == 2
    rec = cert.cases[1]
    psi, neg_phi, lead = rec.algebraic_relation
    # phi = 1/(2t), psi = 1/(16 t^2) - 1/t
    assert neg_phi == -RationalFunction(Polynomial.from_int_coeffs([1]),
                                        Polynomial.from_int_coeffs([0, 2]))
    expected_psi = RationalFunction(
        Polynomial([FieldElement.of(Fraction(1, 16)), FieldElement.of(-1)]),
        Polynomial.from_int_coeffs([0, 0, 1]),
    )
    assert psi == expected_psi


def test_kovacic_case3_positive():
    # hypergeometric normal form with exponent differences (1/2, 1/3, 1/3):
    # r = -3/(16t^2) - 2/(9(t-1)^2) + 3/(16 t (t-1)), finite primitive group;
    # over the common denominator 144 t^2 (t-1)^2 the numerator is
    # -27 (t-1)^2 - 32 t^2 + 27 t (t-1)
    num = Polynomial.from_int_coeffs([-27, 27, -32])
    expected = (
        Polynomial.from_int_coeffs([-27, 54, -27])
        + Polynomial.from_int_coeffs([0, 0, -32])
        + Polynomial.from_int_coeffs([0, -27, 27])
    )
    assert num == expected
    den = Polynomial.from_int_coeffs([0, 0, 144, -288, 144])
    e = ExactODE2(den, Polynomial.zero(), -num, "tetrahedral")
    cert = K.kovacic_run(e)
    assert cert.verdict == "Liouvillian"
    assert cert.case == 3
    assert cert.cases[2].algebraic_relation is not None


def test_kovacic_limit_equation_sl2():
    cert = K.kovacic_run(limit_equation())
    assert cert.verdict == "GroupSL2"
    c1, c2, c3 = cert.cases
    # case 1 ran and every sign family failed (the infinity data leaves the field)
    assert c1.ran and not c1.success
    assert len(c1.attempts) == 256
    assert all(not a.success for a in c1.attempts)
    # case 2 ran and no degree candidate was admissible
    assert c2.ran and not c2.success
    assert not c2.degree_candidates
    # case 3 is excluded by the computed order 0 at infinity
    assert c3.skip_reason is not None and "infinity" in c3.skip_reason


def test_kovacic_determinism():
    a = K.kovacic_run(limit_equation()).describe()
    b = K.kovacic_run(limit_equation()).describe()
    assert a == b


def test_kovacic_scaling_invariance():
    # same equation with rescaled coefficients has the same verdict and records
    e = limit_equation()
    e2 = ExactODE2(e.a2 * FieldElement.of(3), e.a1 * FieldElement.of(3),
                   e.a0 * FieldElement.of(3), "scaled")
    a = K.kovacic_run(e)
    b = K.kovacic_run(e2)
    assert a.verdict == b.verdict
    assert [c.skip_reason for c in a.cases] == [c.skip_reason for c in b.cases]


def test_solution_transport_cross_check():
    # Euler control: X = t^2 solves t^2 X'' = 2 X; the transport of (X, X')
    # from 4 to 5 must reproduce the closed form to high accuracy
    m = M.transport(EULER_ODE, [M.Line(4 + 0j, 5 + 0j)], 1e-12)
    start = np.array([16.0, 8.0])   # (X(4), X'(4))
    end = m @ start
    assert abs(end[0] - 25.0) <= 1e-8
    assert abs(end[1] - 10.0) <= 1e-8


def test_case1_high_order_pole():
    # t^4 X'' = X: r = 1/t^4 has a pole of order 4; solutions t e^{+-1/t},
    # omega = 1/t +- 1/t^2 found through the order-2nu branch of case 1
    e = ode([0, 0, 0, 0, 1], [0], [-1], "quartic-pole")
    cert = K.kovacic_run(e)
    assert cert.verdict == "Liouvillian" and cert.case == 1
    omega = cert.omega()
    assert (omega.derivative() + omega * omega - cert.r).is_zero()


def test_case1_polynomial_infinity_part():
    # X'' = (t^2 + 1) X: omega = t solves the Riccati identity, via the
    # polynomial sqrt expansion at infinity
    e = ode([1], [0], [-1, 0, -1], "gaussian")
    cert = K.kovacic_run(e)
    assert cert.verdict == "Liouvillian" and cert.case == 1
    assert cert.omega() == RationalFunction(Polynomial.from_int_coeffs([0, 1]),
                                            Polynomial.one())


def test_det_prediction_requires_pole():
    from galcert.errors import NotAPole
    from galcert.monodromy import det_prediction

    with pytest.raises(NotAPole):
        det_prediction(limit_equation(), 3)


def test_search_budget_raises_typed_error():
    from galcert.errors import NoConvergence

    b = K._SearchBudget(3)
    with pytest.raises(NoConvergence):
        b.search(K.MAX_CANDIDATE_DEGREE + 1)
    b2 = K._SearchBudget(1)
    for _ in range(K.MAX_POLYNOMIAL_SEARCHES):
        b2.search(0)
    with pytest.raises(NoConvergence):
        b2.search(0)


def test_solution_log_derivative():
    cert = K.kovacic_run(EULER_ODE)
    v = K.solution_log_derivative(cert)
    # X'/X = omega - p/2 with p = 0 here: 2/t
    assert v == RationalFunction(Polynomial.from_int_coeffs([2]),
                                 Polynomial.from_int_coeffs([0, 1]))

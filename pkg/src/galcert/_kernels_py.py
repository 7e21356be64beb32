"""Pure-Python transport kernels (fallback twin of the compiled extension).

The hot loop of the monodromy computation is adaptive Runge-Kutta stepping of
the 2x2 fundamental-matrix system of a second-order linear ODE with
polynomial coefficients along complex-plane segments.  The compiled extension
implements the identical algorithm; this module is the reference
implementation selected when the extension is unavailable.

Segments are parametrized by sigma in [0, 1]:
    kind 0 (line): t = a + sigma * b,          dt/dsigma = b
    kind 1 (arc):  t = a + b exp(i c sigma),   dt/dsigma = i c b exp(i c sigma)
"""

from __future__ import annotations

from typing import Callable, Sequence, Tuple

BACKEND = "python"

# Dormand-Prince 5(4) tableau
_A21 = 0.2
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

_H_FLOOR = 1e-13
_MAX_STEPS = 2_000_000


class KernelError(RuntimeError):
    pass


def _horner(coeffs, t):
    out = 0j
    for i in range(len(coeffs) - 1, -1, -1):
        out = out * t + coeffs[i]
    return out


def transport_poly_segments(
    c2: Sequence[complex],
    c1: Sequence[complex],
    c0: Sequence[complex],
    seg_kinds: Sequence[int],
    seg_params: Sequence[Tuple[complex, complex, complex]],
    tol: float,
    m_init: Tuple[complex, complex, complex, complex] = (1 + 0j, 0j, 0j, 1 + 0j),
) -> Tuple[Tuple[complex, complex, complex, complex], int]:
    """Fundamental matrix after traversing all segments; returns (M, steps).

    M is row-major (m00, m01, m10, m11) acting on solution vectors (X, X') at
    the start of the path.
    """
    m00, m01, m10, m11 = m_init
    steps = 0
    c2 = tuple(complex(x) for x in c2)
    c1 = tuple(complex(x) for x in c1)
    c0 = tuple(complex(x) for x in c0)

    for kind, (pa, pb, pc) in zip(seg_kinds, seg_params):

        def rhs(sigma, y):
            if kind == 0:
                t = pa + sigma * pb
                dt = pb
            else:
                e = complex(pb) * _cexp(1j * pc * sigma)
                t = pa + e
                dt = 1j * pc * e
            a2 = _horner(c2, t)
            if a2 == 0:
                raise KernelError(f"coefficient a2 vanished at t = {t}")
            p = _horner(c1, t) / a2
            q = _horner(c0, t) / a2
            y0, y1, y2, y3 = y
            return (
                dt * y2,
                dt * y3,
                dt * (-q * y0 - p * y2),
                dt * (-q * y1 - p * y3),
            )

        y = (m00, m01, m10, m11)
        y, n = _dp45(rhs, y, tol)
        steps += n
        m00, m01, m10, m11 = y
    return (m00, m01, m10, m11), steps


def _cexp(z: complex) -> complex:
    import cmath

    return cmath.exp(z)


def dp45(rhs: Callable, y0: Sequence[complex], tol: float) -> Tuple[Tuple[complex, ...], int]:
    """Adaptive Dormand-Prince 5(4) over sigma in [0, 1] for a complex state.

    ``rhs(sigma, y)`` returns the derivative tuple.  Exposed for callers with
    non-polynomial coefficients (branch-tracked transports).
    """
    return _dp45(rhs, tuple(y0), tol)


def _dp45(rhs, y, tol):
    s = 0.0
    h = 0.05
    steps = 0
    n = len(y)
    k1 = rhs(s, y)
    while s < 1.0:
        if h > 1.0 - s:
            h = 1.0 - s
        y2 = tuple(y[i] + h * _A21 * k1[i] for i in range(n))
        k2 = rhs(s + 0.2 * h, y2)
        y3 = tuple(y[i] + h * (_A31 * k1[i] + _A32 * k2[i]) for i in range(n))
        k3 = rhs(s + 0.3 * h, y3)
        y4 = tuple(y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i]) for i in range(n))
        k4 = rhs(s + 0.8 * h, y4)
        y5 = tuple(
            y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
            for i in range(n)
        )
        k5 = rhs(s + (8.0 / 9.0) * h, y5)
        y6 = tuple(
            y[i]
            + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
            for i in range(n)
        )
        k6 = rhs(s + h, y6)
        ynew = tuple(
            y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
            for i in range(n)
        )
        k7 = rhs(s + h, ynew)
        err = 0.0
        ymax = 0.0
        for i in range(n):
            e = h * (
                _E1 * k1[i]
                + _E3 * k3[i]
                + _E4 * k4[i]
                + _E5 * k5[i]
                + _E6 * k6[i]
                + _E7 * k7[i]
            )
            ae = abs(e)
            if ae > err:
                err = ae
            ay = abs(ynew[i])
            if ay > ymax:
                ymax = ay
        scale = tol * (1.0 + ymax)
        if err <= scale:
            s += h
            y = ynew
            k1 = k7
        steps += 1
        if steps > _MAX_STEPS:
            raise KernelError("step budget exhausted")
        ratio = (scale / err) ** 0.2 if err > 0.0 else 5.0
        fac = 0.9 * ratio
        if fac < 0.2:
            fac = 0.2
        elif fac > 5.0:
            fac = 5.0
        h *= fac
        if h < _H_FLOOR:
            raise KernelError("step size underflow (singularity on path?)")
    return y, steps

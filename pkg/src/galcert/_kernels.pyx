# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled transport kernel: adaptive RK stepping of 2x2 fundamental matrices.

Twin of _kernels_py.transport_poly_segments; the algorithm and tableau are
identical so the two backends are interchangeable to round-off.
"""

import numpy as np

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double cabs(double complex)

cdef double A21 = 0.2
cdef double A31 = 3.0/40.0, A32 = 9.0/40.0
cdef double A41 = 44.0/45.0, A42 = -56.0/15.0, A43 = 32.0/9.0
cdef double A51 = 19372.0/6561.0, A52 = -25360.0/2187.0, A53 = 64448.0/6561.0, A54 = -212.0/729.0
cdef double A61 = 9017.0/3168.0, A62 = -355.0/33.0, A63 = 46732.0/5247.0, A64 = 49.0/176.0, A65 = -5103.0/18656.0
cdef double B1 = 35.0/384.0, B3 = 500.0/1113.0, B4 = 125.0/192.0, B5 = -2187.0/6784.0, B6 = 11.0/84.0
cdef double E1 = 71.0/57600.0, E3 = -71.0/16695.0, E4 = 71.0/1920.0, E5 = -17253.0/339200.0, E6 = 22.0/525.0, E7 = -1.0/40.0

cdef double H_FLOOR = 1e-13
cdef long MAX_STEPS = 2000000

BACKEND = "compiled"


class KernelError(RuntimeError):
    pass


cdef inline double complex horner(double complex[::1] c, double complex t) nogil:
    cdef Py_ssize_t i
    cdef double complex out = 0
    for i in range(c.shape[0] - 1, -1, -1):
        out = out * t + c[i]
    return out


cdef inline int rhs(double complex[::1] c2, double complex[::1] c1, double complex[::1] c0,
                    int kind, double complex pa, double complex pb, double complex pc,
                    double sigma, double complex* y, double complex* out) nogil:
    cdef double complex t, dt, e, a2, p, q
    if kind == 0:
        t = pa + sigma * pb
        dt = pb
    else:
        e = pb * cexp(1j * pc * sigma)
        t = pa + e
        dt = 1j * pc * e
    a2 = horner(c2, t)
    if a2 == 0:
        return -1
    p = horner(c1, t) / a2
    q = horner(c0, t) / a2
    out[0] = dt * y[2]
    out[1] = dt * y[3]
    out[2] = dt * (-q * y[0] - p * y[2])
    out[3] = dt * (-q * y[1] - p * y[3])
    return 0


def transport_poly_segments(c2, c1, c0, seg_kinds, seg_params, double tol,
                            m_init=(1 + 0j, 0j, 0j, 1 + 0j)):
    """Fundamental matrix after traversing all segments; returns (M, steps)."""
    cdef double complex[::1] a2v = np.ascontiguousarray(c2, dtype=np.complex128)
    cdef double complex[::1] a1v = np.ascontiguousarray(c1, dtype=np.complex128)
    cdef double complex[::1] a0v = np.ascontiguousarray(c0, dtype=np.complex128)
    cdef double complex y[4]
    cdef double complex ytmp[4]
    cdef double complex ynew[4]
    cdef double complex k1[4]
    cdef double complex k2[4]
    cdef double complex k3[4]
    cdef double complex k4[4]
    cdef double complex k5[4]
    cdef double complex k6[4]
    cdef double complex k7[4]
    cdef double complex err_i
    cdef double s, h, err, ymax, scale, fac, ae, ay
    cdef long steps = 0
    cdef int i, kind, flag
    cdef double complex pa, pb, pc
    y[0], y[1], y[2], y[3] = m_init

    kinds = list(seg_kinds)
    params = list(seg_params)
    for seg_index in range(len(kinds)):
        kind = kinds[seg_index]
        pa, pb, pc = params[seg_index]
        s = 0.0
        h = 0.05
        flag = rhs(a2v, a1v, a0v, kind, pa, pb, pc, s, y, k1)
        if flag:
            raise KernelError("coefficient a2 vanished on path")
        while s < 1.0:
            if h > 1.0 - s:
                h = 1.0 - s
            for i in range(4):
                ytmp[i] = y[i] + h * A21 * k1[i]
            flag = rhs(a2v, a1v, a0v, kind, pa, pb, pc, s + 0.2 * h, ytmp, k2)
            if flag:
                raise KernelError("coefficient a2 vanished on path")
            for i in range(4):
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i])
            flag = rhs(a2v, a1v, a0v, kind, pa, pb, pc, s + 0.3 * h, ytmp, k3)
            if flag:
                raise KernelError("coefficient a2 vanished on path")
            for i in range(4):
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
            flag = rhs(a2v, a1v, a0v, kind, pa, pb, pc, s + 0.8 * h, ytmp, k4)
            if flag:
                raise KernelError("coefficient a2 vanished on path")
            for i in range(4):
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
            flag = rhs(a2v, a1v, a0v, kind, pa, pb, pc, s + (8.0 / 9.0) * h, ytmp, k5)
            if flag:
                raise KernelError("coefficient a2 vanished on path")
            for i in range(4):
                ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
            flag = rhs(a2v, a1v, a0v, kind, pa, pb, pc, s + h, ytmp, k6)
            if flag:
                raise KernelError("coefficient a2 vanished on path")
            for i in range(4):
                ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
            flag = rhs(a2v, a1v, a0v, kind, pa, pb, pc, s + h, ynew, k7)
            if flag:
                raise KernelError("coefficient a2 vanished on path")
            err = 0.0
            ymax = 0.0
            for i in range(4):
                err_i = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
                ae = cabs(err_i)
                if ae > err:
                    err = ae
                ay = cabs(ynew[i])
                if ay > ymax:
                    ymax = ay
            scale = tol * (1.0 + ymax)
            if err <= scale:
                s += h
                for i in range(4):
                    y[i] = ynew[i]
                    k1[i] = k7[i]
            steps += 1
            if steps > MAX_STEPS:
                raise KernelError("step budget exhausted")
            if err > 0.0:
                fac = 0.9 * (scale / err) ** 0.2
            else:
                fac = 5.0
            if fac < 0.2:
                fac = 0.2
            elif fac > 5.0:
                fac = 5.0
            h *= fac
            if h < H_FLOOR:
                raise KernelError("step size underflow (singularity on path?)")
    return (y[0], y[1], y[2], y[3]), steps

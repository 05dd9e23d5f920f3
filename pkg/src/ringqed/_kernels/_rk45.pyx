# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 5(4) stepper for the Lindblad right-hand side.

Twin of ``_numpy_impl.rk45_lindblad`` (same algorithm, same semantics);
matrix products go straight to BLAS zgemm and the stage combinations run as
fused loops, which removes the per-call dispatch overhead that dominates at
Hilbert dimensions of a few dozen.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()

ctypedef double complex zcomplex

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

cdef int C_OK = 0
cdef int C_UNDERFLOW = 1
cdef int C_MAXSTEPS = 2

# Dormand-Prince tableau (c nodes implicit in the a coefficients)
cdef double A2[1]
cdef double A3[2]
cdef double A4[3]
cdef double A5[4]
cdef double A6[5]
cdef double A7[6]
cdef double B5[7]
cdef double EC[7]
A2[0] = 1.0/5
A3[0] = 3.0/40;        A3[1] = 9.0/40
A4[0] = 44.0/45;       A4[1] = -56.0/15;      A4[2] = 32.0/9
A5[0] = 19372.0/6561;  A5[1] = -25360.0/2187; A5[2] = 64448.0/6561; A5[3] = -212.0/729
A6[0] = 9017.0/3168;   A6[1] = -355.0/33;     A6[2] = 46732.0/5247; A6[3] = 49.0/176;  A6[4] = -5103.0/18656
A7[0] = 35.0/384;      A7[1] = 0.0;           A7[2] = 500.0/1113;   A7[3] = 125.0/192; A7[4] = -2187.0/6784; A7[5] = 11.0/84
B5[0] = 35.0/384; B5[1] = 0.0; B5[2] = 500.0/1113; B5[3] = 125.0/192; B5[4] = -2187.0/6784; B5[5] = 11.0/84; B5[6] = 0.0
EC[0] = 71.0/57600; EC[1] = 0.0; EC[2] = -71.0/16695; EC[3] = 71.0/1920
EC[4] = -17253.0/339200; EC[5] = 22.0/525; EC[6] = -1.0/40


DEF CHAR_N = 78  # 'N'
DEF CHAR_C = 67  # 'C'


cdef inline void _zmm(zcomplex* a, zcomplex* b, zcomplex* c, int d,
                      zcomplex alpha, zcomplex beta) noexcept nogil:
    # C = alpha * A @ B + beta * C for row-major square matrices:
    # in Fortran view C^T = alpha B^T A^T + beta C^T.
    cdef char nn = CHAR_N
    zgemm(&nn, &nn, &d, &d, &d, &alpha, b, &d, a, &d, &beta, c, &d)


cdef inline void _zmm_dagright(zcomplex* a, zcomplex* b, zcomplex* c, int d,
                               zcomplex alpha, zcomplex beta) noexcept nogil:
    # C = alpha * B @ A† + beta * C:  C^T = alpha (A^T)^H B^T + beta C^T.
    cdef char cc = CHAR_C
    cdef char nn = CHAR_N
    zgemm(&cc, &nn, &d, &d, &d, &alpha, a, &d, b, &d, &beta, c, &d)


cdef void _rhs(zcomplex* hnh, zcomplex* ls, double* rates, int njump,
               zcomplex* y, zcomplex* out, zcomplex* tmp, int d) noexcept nogil:
    # out = hnh y + (hnh y)† + sum_k r_k L_k y L_k†   (y Hermitian)
    cdef int i, j, k
    cdef zcomplex one = 1.0
    cdef zcomplex zero = 0.0
    cdef zcomplex rk
    _zmm(hnh, y, tmp, d, one, zero)
    for i in range(d):
        for j in range(d):
            out[i*d + j] = tmp[i*d + j] + tmp[j*d + i].conjugate()
    for k in range(njump):
        if rates[k] == 0.0:
            continue
        rk = rates[k]
        _zmm(ls + k*d*d, y, tmp, d, one, zero)
        _zmm_dagright(ls + k*d*d, tmp, out, d, rk, one)


cdef double _err_norm(zcomplex* err, zcomplex* y, zcomplex* ynew,
                      double rtol, double atol, int n) noexcept nogil:
    cdef double acc = 0.0
    cdef double ay, an, sc, e
    cdef int i
    for i in range(n):
        ay = abs(y[i]); an = abs(ynew[i])
        sc = atol + rtol * (ay if ay > an else an)
        e = abs(err[i]) / sc
        acc += e * e
    return sqrt(acc / n)


cdef double _scaled_rms(zcomplex* v, zcomplex* y, double rtol, double atol,
                        int n) noexcept nogil:
    cdef double acc = 0.0, sc, e
    cdef int i
    for i in range(n):
        sc = atol + rtol * abs(y[i])
        e = abs(v[i]) / sc
        acc += e * e
    return sqrt(acc / n)


def rk45_lindblad(cnp.ndarray[zcomplex, ndim=2] h_nh,
                  cnp.ndarray[zcomplex, ndim=3] ls,
                  cnp.ndarray[double, ndim=1] rates,
                  cnp.ndarray[zcomplex, ndim=2] rho0,
                  cnp.ndarray[double, ndim=1] t_grid,
                  double rtol=1e-8, double atol=1e-10,
                  double max_step=np.inf, double first_step=0.0,
                  long max_steps=20_000_000):
    """Integrate the Lindblad RHS, returning snapshots at ``t_grid``."""
    cdef int d = rho0.shape[0]
    cdef int n = d * d
    cdef int m = t_grid.shape[0]
    cdef int njump = ls.shape[0]

    h_nh = np.ascontiguousarray(h_nh)
    ls = np.ascontiguousarray(ls)
    rates = np.ascontiguousarray(rates)
    t_grid = np.ascontiguousarray(t_grid)

    cdef cnp.ndarray[zcomplex, ndim=3] out = np.empty((m, d, d), dtype=complex)
    cdef cnp.ndarray[zcomplex, ndim=2] ybuf = np.ascontiguousarray(rho0).copy()
    cdef cnp.ndarray[zcomplex, ndim=3] kbuf = np.empty((7, d, d), dtype=complex)
    cdef cnp.ndarray[zcomplex, ndim=2] ytmp = np.empty((d, d), dtype=complex)
    cdef cnp.ndarray[zcomplex, ndim=2] ynew = np.empty((d, d), dtype=complex)
    cdef cnp.ndarray[zcomplex, ndim=2] errb = np.empty((d, d), dtype=complex)
    cdef cnp.ndarray[zcomplex, ndim=2] tmpb = np.empty((d, d), dtype=complex)

    cdef zcomplex* hp = <zcomplex*> h_nh.data
    cdef zcomplex* lp = <zcomplex*> ls.data
    cdef double* rp = <double*> rates.data
    cdef zcomplex* y = <zcomplex*> ybuf.data
    cdef zcomplex* kp = <zcomplex*> kbuf.data
    cdef zcomplex* yt = <zcomplex*> ytmp.data
    cdef zcomplex* yn = <zcomplex*> ynew.data
    cdef zcomplex* ep = <zcomplex*> errb.data
    cdef zcomplex* tp = <zcomplex*> tmpb.data
    cdef zcomplex* op = <zcomplex*> out.data
    cdef double* tg = <double*> t_grid.data

    cdef long nsteps = 0, naccept = 0, nreject = 0, nfev = 0
    cdef int status = C_OK
    cdef int i, j, s, idx
    cdef double t, t_end, t_target, h, span, enorm, factor
    cdef double d0, d1, d2, h0, h1
    cdef zcomplex acc

    # hermitize the initial state
    for i in range(d):
        for j in range(i, d):
            acc = 0.5 * (y[i*d + j] + y[j*d + i].conjugate())
            y[i*d + j] = acc
            y[j*d + i] = acc.conjugate()
    for i in range(n):
        op[i] = y[i]

    info = {"nsteps": 0, "naccept": 0, "nreject": 0, "nfev": 0,
            "status": STATUS_OK, "t_reached": float(t_grid[0])}
    if m == 1:
        return out, info

    t = tg[0]
    t_end = tg[m - 1]
    span = t_end - t
    idx = 1

    with nogil:
        _rhs(hp, lp, rp, njump, y, kp, tp, d)
        nfev += 1
        if first_step > 0:
            h = first_step
        else:
            # Hairer-style starting step
            d0 = _scaled_rms(y, y, rtol, atol, n)
            d1 = _scaled_rms(kp, y, rtol, atol, n)
            if d0 < 1e-5 or d1 < 1e-5:
                h0 = 1e-6 * span
            else:
                h0 = 0.01 * d0 / d1
            for i in range(n):
                yt[i] = y[i] + h0 * kp[i]
            _rhs(hp, lp, rp, njump, yt, kp + n, tp, d)
            nfev += 1
            for i in range(n):
                ep[i] = kp[n + i] - kp[i]
            d2 = _scaled_rms(ep, y, rtol, atol, n) / h0
            if (d1 if d1 > d2 else d2) <= 1e-15:
                h1 = h0 * 1e-3
                if h1 < 1e-6:
                    h1 = 1e-6
            else:
                h1 = pow(0.01 / (d1 if d1 > d2 else d2), 0.2)
            h = 100 * h0
            if h1 < h: h = h1
            if max_step < h: h = max_step
            if span < h: h = span

        while idx < m:
            if nsteps >= max_steps:
                status = C_MAXSTEPS
                break
            t_target = tg[idx]
            if max_step < h: h = max_step
            if t_target - t < h: h = t_target - t
            if h < 1e-13 * (1.0 if fabs(t) < 1.0 else fabs(t)):
                status = C_UNDERFLOW
                break

            # stages 2..7 (k1 already in kp)
            for i in range(n):
                yt[i] = y[i] + h * A2[0] * kp[i]
            _rhs(hp, lp, rp, njump, yt, kp + n, tp, d)
            for i in range(n):
                yt[i] = y[i] + h * (A3[0]*kp[i] + A3[1]*kp[n+i])
            _rhs(hp, lp, rp, njump, yt, kp + 2*n, tp, d)
            for i in range(n):
                yt[i] = y[i] + h * (A4[0]*kp[i] + A4[1]*kp[n+i] + A4[2]*kp[2*n+i])
            _rhs(hp, lp, rp, njump, yt, kp + 3*n, tp, d)
            for i in range(n):
                yt[i] = y[i] + h * (A5[0]*kp[i] + A5[1]*kp[n+i] + A5[2]*kp[2*n+i] + A5[3]*kp[3*n+i])
            _rhs(hp, lp, rp, njump, yt, kp + 4*n, tp, d)
            for i in range(n):
                yt[i] = y[i] + h * (A6[0]*kp[i] + A6[1]*kp[n+i] + A6[2]*kp[2*n+i] + A6[3]*kp[3*n+i] + A6[4]*kp[4*n+i])
            _rhs(hp, lp, rp, njump, yt, kp + 5*n, tp, d)
            for i in range(n):
                yn[i] = y[i] + h * (A7[0]*kp[i] + A7[2]*kp[2*n+i] + A7[3]*kp[3*n+i] + A7[4]*kp[4*n+i] + A7[5]*kp[5*n+i])
            _rhs(hp, lp, rp, njump, yn, kp + 6*n, tp, d)
            nfev += 6

            for i in range(n):
                ep[i] = h * (EC[0]*kp[i] + EC[2]*kp[2*n+i] + EC[3]*kp[3*n+i]
                             + EC[4]*kp[4*n+i] + EC[5]*kp[5*n+i] + EC[6]*kp[6*n+i])
            enorm = _err_norm(ep, y, yn, rtol, atol, n)
            nsteps += 1

            if enorm <= 1.0:
                t = t + h
                naccept += 1
                # accept: y = hermitized ynew
                for i in range(d):
                    for j in range(i, d):
                        acc = 0.5 * (yn[i*d + j] + yn[j*d + i].conjugate())
                        y[i*d + j] = acc
                        y[j*d + i] = acc.conjugate()
                if t >= t_target - 1e-14 * (1.0 if fabs(t_target) < 1.0 else fabs(t_target)):
                    t = t_target
                    for i in range(n):
                        op[idx*n + i] = y[i]
                    idx += 1
                _rhs(hp, lp, rp, njump, y, kp, tp, d)
                nfev += 1
                if enorm == 0.0:
                    factor = 10.0
                else:
                    factor = 0.9 * pow(enorm, -0.2)
                    if factor > 10.0: factor = 10.0
                    if factor < 0.2: factor = 0.2
                h = h * factor
            else:
                nreject += 1
                factor = 0.9 * pow(enorm, -0.2)
                if factor > 1.0: factor = 1.0
                if factor < 0.1: factor = 0.1
                h = h * factor

    info["nsteps"] = nsteps
    info["naccept"] = naccept
    info["nreject"] = nreject
    info["nfev"] = nfev
    info["status"] = status
    info["t_reached"] = t
    return out, info


def lindblad_apply(h_nh, ls, rates, rho):
    """Single RHS evaluation with the Hermitian-state fast path."""
    cdef cnp.ndarray[zcomplex, ndim=2] hb = np.ascontiguousarray(h_nh, dtype=complex)
    cdef cnp.ndarray[zcomplex, ndim=3] lb = np.ascontiguousarray(ls, dtype=complex)
    cdef cnp.ndarray[double, ndim=1] rb = np.ascontiguousarray(rates, dtype=float)
    cdef cnp.ndarray[zcomplex, ndim=2] yb = np.ascontiguousarray(rho, dtype=complex)
    cdef int d = yb.shape[0]
    cdef cnp.ndarray[zcomplex, ndim=2] ob = np.empty((d, d), dtype=complex)
    cdef cnp.ndarray[zcomplex, ndim=2] tb = np.empty((d, d), dtype=complex)
    _rhs(<zcomplex*> hb.data, <zcomplex*> lb.data, <double*> rb.data,
         lb.shape[0], <zcomplex*> yb.data, <zcomplex*> ob.data,
         <zcomplex*> tb.data, d)
    return ob

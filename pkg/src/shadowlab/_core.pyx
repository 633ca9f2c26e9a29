# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled implementation of the hot kernels.

Same contracts as ``shadowlab._core_pure``; the dispatcher in
``shadowlab.kernels`` prefers this module when the extension built. The
loops keep the per-candidate temporaries in registers instead of
materializing the (m, n, d) batch arrays the numpy backend works through.
"""

import numpy as np

from libc.math cimport INFINITY, sqrt

BACKEND = "compiled"


def opt_lambda_residuals(X, V):
    """Per-index optimal rescaling of V against X.

    X, V : (n, d) complex arrays. Returns (lam, res) where lam[k] minimizes
    ||X[k] - lam*V[k]|| and res[k] is the minimum. lam is 0 where V[k] = 0.
    The residual is evaluated as an explicit difference: the Pythagoras form
    cancels catastrophically on near-collinear pairs with large norms.
    """
    X = np.ascontiguousarray(X, dtype=np.complex128)
    V = np.ascontiguousarray(V, dtype=np.complex128)
    if X.shape != V.shape:
        raise ValueError("X and V must have identical shapes")
    cdef const double complex[:, ::1] Xv = X
    cdef const double complex[:, ::1] Vv = V
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    lam_arr = np.zeros(n, dtype=np.complex128)
    res_arr = np.zeros(n, dtype=np.float64)
    cdef double complex[::1] lam = lam_arr
    cdef double[::1] res = res_arr
    cdef Py_ssize_t k, i
    cdef double vv, rr
    cdef double complex xv, l, dz
    with nogil:
        for k in range(n):
            vv = 0.0
            xv = 0
            for i in range(d):
                vv += Vv[k, i].real * Vv[k, i].real + Vv[k, i].imag * Vv[k, i].imag
                xv += Vv[k, i].conjugate() * Xv[k, i]
            if vv > 0.0:
                l = xv / vv
            else:
                l = 0
            lam[k] = l
            rr = 0.0
            for i in range(d):
                dz = Xv[k, i] - l * Vv[k, i]
                rr += dz.real * dz.real + dz.imag * dz.imag
            res[k] = sqrt(rr)
    return lam_arr, res_arr


def sup_residuals(P, X, Q):
    """Sup over the window of the optimally rescaled residual, per candidate.

    P : (n, d, d) stack of operator powers aligned with the window,
    X : (n, d) trajectory points, Q : (m, d) candidates. Returns (m,) with
    sups[j] = max_k dist(X[k], C * P[k] @ Q[j]). Uses the Pythagoras form,
    which loses absolute accuracy ~||X[k]||*sqrt(eps) on near-collinear
    pairs; final reporting should re-score through opt_lambda_residuals.
    """
    P = np.ascontiguousarray(P, dtype=np.complex128)
    X = np.ascontiguousarray(X, dtype=np.complex128)
    Q = np.atleast_2d(np.ascontiguousarray(Q, dtype=np.complex128))
    cdef const double complex[:, :, ::1] Pv = P
    cdef const double complex[:, ::1] Xv = X
    cdef const double complex[:, ::1] Qv = Q
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1], m = Qv.shape[0]
    out_arr = np.empty(m, dtype=np.float64)
    xx_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] xx = xx_arr
    cdef Py_ssize_t j, k, i, l
    cdef double vv, best, res2
    cdef double complex v, xv
    with nogil:
        for k in range(n):
            vv = 0.0
            for i in range(d):
                vv += Xv[k, i].real * Xv[k, i].real + Xv[k, i].imag * Xv[k, i].imag
            xx[k] = vv
        for j in range(m):
            best = 0.0
            for k in range(n):
                vv = 0.0
                xv = 0
                for i in range(d):
                    v = 0
                    for l in range(d):
                        v += Pv[k, i, l] * Qv[j, l]
                    vv += v.real * v.real + v.imag * v.imag
                    xv += v.conjugate() * Xv[k, i]
                if vv > 0.0:
                    res2 = xx[k] - (xv.real * xv.real + xv.imag * xv.imag) / vv
                else:
                    res2 = xx[k]
                if res2 > best:
                    best = res2
            out[j] = sqrt(best) if best > 0.0 else 0.0
    return out_arr


def certified_lows(P, X, xnorms, pnorms, s1s2, smins, Q, h):
    """Per-candidate certified lower bound over a covering cell of radius h.

    For cell center q and any cell point q', the optimally rescaled residual
    satisfies res_k(q') >= res_k(q) - ||X[k]|| * dc(P[k]q', P[k]q), with dc
    the chordal distance between the spanned lines. Two chordal bounds are
    intersected per index, writing v = ||P[k]q|| and g = v - pnorms[k]*h
    (a lower bound for ||P[k]q'||):
        dc <= pnorms[k]*h / g                    (norm route, needs g > 0)
        dc <= s1s2[k]*h / (v * max(smins[k], g)) (wedge route: the exterior
              square of P[k] scales q' wedge q by at most s1s2[k], and
              |q' wedge q| <= h for unit vectors with covering radius h)
    together with the trivial dc <= 1. The certified low is the max over k
    of res_k(q) minus the slack. xnorms[k] = ||X[k]||; pnorms, s1s2, smins
    are the largest, product of two largest, and smallest singular values of
    P[k]. h is a scalar or per-candidate array bounding the euclidean
    covering radius of the cell up to a global phase (line distances are
    phase-invariant, so callers may rotate cell points before measuring).
    """
    P = np.ascontiguousarray(P, dtype=np.complex128)
    X = np.ascontiguousarray(X, dtype=np.complex128)
    Q = np.atleast_2d(np.ascontiguousarray(Q, dtype=np.complex128))
    cdef const double complex[:, :, ::1] Pv = P
    cdef const double complex[:, ::1] Xv = X
    cdef const double complex[:, ::1] Qv = Q
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1], m = Qv.shape[0]
    h_arr = np.ascontiguousarray(
        np.broadcast_to(np.asarray(h, dtype=np.float64), (m,))
    )
    xn_arr = np.ascontiguousarray(xnorms, dtype=np.float64)
    pn_arr = np.ascontiguousarray(pnorms, dtype=np.float64)
    ss_arr = np.ascontiguousarray(s1s2, dtype=np.float64)
    sm_arr = np.ascontiguousarray(smins, dtype=np.float64)
    cdef const double[::1] hv = h_arr
    cdef const double[::1] xn = xn_arr
    cdef const double[::1] pn = pn_arr
    cdef const double[::1] ss = ss_arr
    cdef const double[::1] sm = sm_arr
    out_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t j, k, i, l
    cdef double vv, res2, res, vnorm, g, den, dc, dcn, dcw, low, best, hj
    cdef double complex v, xv
    with nogil:
        for j in range(m):
            hj = hv[j]
            best = -INFINITY
            for k in range(n):
                vv = 0.0
                xv = 0
                for i in range(d):
                    v = 0
                    for l in range(d):
                        v += Pv[k, i, l] * Qv[j, l]
                    vv += v.real * v.real + v.imag * v.imag
                    xv += v.conjugate() * Xv[k, i]
                if vv <= 0.0:
                    continue
                res2 = xn[k] * xn[k] - (xv.real * xv.real + xv.imag * xv.imag) / vv
                res = sqrt(res2) if res2 > 0.0 else 0.0
                vnorm = sqrt(vv)
                g = vnorm - pn[k] * hj
                dcn = (pn[k] * hj) / g if g > 0.0 else INFINITY
                den = vnorm * (sm[k] if sm[k] > g else g)
                dcw = (ss[k] * hj) / den if den > 0.0 else INFINITY
                dc = dcn if dcn < dcw else dcw
                if dc > 1.0:
                    dc = 1.0
                low = res - xn[k] * dc
                if low > best:
                    best = low
            out[j] = best
    return out_arr

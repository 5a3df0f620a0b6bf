# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-AP kernels. Same signatures and semantics as ``_pykernels``."""
import numpy as np
from libc.math cimport cos, sin, sqrt, fabs

cdef double PI = 3.141592653589793


cdef inline void _channel_k(const double[:, :, ::1] dirs, const double[:, :, ::1] fields,
                            const double complex[:, ::1] prv, double scale,
                            Py_ssize_t k, const double* q, const double* A, int ncol,
                            double lam, double complex* out) noexcept nogil:
    # A is row-major 3 x ncol; columns 1.. are the receive polarizations
    cdef Py_ssize_t l, r
    cdef Py_ssize_t L = dirs.shape[1]
    cdef int R = ncol - 1
    cdef double proj, ghat, ev, ph, sg
    cdef double complex term
    for r in range(R):
        out[r] = 0.0
    for l in range(L):
        ghat = dirs[k, l, 0] * A[0] + dirs[k, l, 1] * A[ncol] + dirs[k, l, 2] * A[2 * ncol]
        if ghat <= 0.0:
            continue
        proj = dirs[k, l, 0] * q[0] + dirs[k, l, 1] * q[1] + dirs[k, l, 2] * q[2]
        ph = -2.0 * PI / lam * proj
        term = (cos(ph) + 1j * sin(ph)) * prv[k, l]
        sg = sqrt(ghat)
        for r in range(R):
            ev = (fields[k, l, 0] * A[r + 1] + fields[k, l, 1] * A[ncol + r + 1]
                  + fields[k, l, 2] * A[2 * ncol + r + 1])
            out[r] = out[r] + term * (scale * sg * fabs(ev))


cdef double _objective(const double[:, :, ::1] dirs, const double[:, :, ::1] fields,
                       const double complex[:, ::1] prv, const double[::1] dist,
                       const double complex[:, ::1] c, const double complex[:, :, ::1] P,
                       const double* q, const double* A, int ncol, double lam) noexcept nogil:
    cdef Py_ssize_t k, r, s
    cdef Py_ssize_t K = dirs.shape[0]
    cdef int R = ncol - 1
    cdef double complex h[3]
    cdef double complex acc
    cdef double lin = 0.0, quad = 0.0
    for k in range(K):
        _channel_k(dirs, fields, prv, lam / (4.0 * PI * dist[k]), k, q, A, ncol, lam, h)
        for r in range(R):
            lin += 2.0 * (c[k, r] * h[r]).real
            acc = 0.0
            for s in range(R):
                acc = acc + P[k, r, s] * h[s]
            quad += (h[r].conjugate() * acc).real
    return lin - quad


def ap_channel(const double[:, :, ::1] dirs, const double[:, :, ::1] fields,
               const double complex[:, ::1] prv, const double[::1] dist,
               q, A, double lam):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef int ncol = Av.shape[1]
    cdef Py_ssize_t K = dirs.shape[0], k, r
    out = np.empty((K, ncol - 1), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    cdef double complex h[3]
    for k in range(K):
        _channel_k(dirs, fields, prv, lam / (4.0 * PI * dist[k]), k, &qv[0], &Av[0, 0],
                   ncol, lam, h)
        for r in range(ncol - 1):
            ov[k, r] = h[r]
    return out


def ap_channel_positions(const double[:, :, ::1] dirs, const double[:, :, ::1] fields,
                         const double complex[:, ::1] prv, const double[::1] dist,
                         Q, A, double lam):
    cdef double[:, ::1] Qv = np.ascontiguousarray(Q, dtype=np.float64)
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef int ncol = Av.shape[1]
    cdef Py_ssize_t N = Qv.shape[0], K = dirs.shape[0], n, k, r
    out = np.empty((N, K, ncol - 1), dtype=np.complex128)
    cdef double complex[:, :, ::1] ov = out
    cdef double complex h[3]
    with nogil:
        for n in range(N):
            for k in range(K):
                _channel_k(dirs, fields, prv, lam / (4.0 * PI * dist[k]), k, &Qv[n, 0],
                           &Av[0, 0], ncol, lam, h)
                for r in range(ncol - 1):
                    ov[n, k, r] = h[r]
    return out


def ap_channel_orientations(const double[:, :, ::1] dirs, const double[:, :, ::1] fields,
                            const double complex[:, ::1] prv, const double[::1] dist,
                            q, As, double lam):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, :, ::1] Av = np.ascontiguousarray(As, dtype=np.float64)
    cdef int ncol = Av.shape[2]
    cdef Py_ssize_t N = Av.shape[0], K = dirs.shape[0], n, k, r
    out = np.empty((N, K, ncol - 1), dtype=np.complex128)
    cdef double complex[:, :, ::1] ov = out
    cdef double complex h[3]
    with nogil:
        for n in range(N):
            for k in range(K):
                _channel_k(dirs, fields, prv, lam / (4.0 * PI * dist[k]), k, &qv[0],
                           &Av[n, 0, 0], ncol, lam, h)
                for r in range(ncol - 1):
                    ov[n, k, r] = h[r]
    return out


def local_objective(const double[:, :, ::1] dirs, const double[:, :, ::1] fields,
                    const double complex[:, ::1] prv, const double[::1] dist,
                    const double complex[:, ::1] c, const double complex[:, :, ::1] P,
                    q, A, double lam):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    return _objective(dirs, fields, prv, dist, c, P, &qv[0], &Av[0, 0], Av.shape[1], lam)


def fd_gradient(const double[:, :, ::1] dirs, const double[:, :, ::1] fields,
                const double complex[:, ::1] prv, const double[::1] dist,
                const double complex[:, ::1] c, const double complex[:, :, ::1] P,
                q, A, double lam, double step):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef int ncol = Av.shape[1]
    cdef double Aw[9]
    cdef int i, j
    cdef double base, val
    grad = np.empty((3, ncol), dtype=np.float64)
    cdef double[:, ::1] gv = grad
    for i in range(3):
        for j in range(ncol):
            Aw[i * ncol + j] = Av[i, j]
    base = _objective(dirs, fields, prv, dist, c, P, &qv[0], Aw, ncol, lam)
    for i in range(3):
        for j in range(ncol):
            Aw[i * ncol + j] = Av[i, j] + step
            val = _objective(dirs, fields, prv, dist, c, P, &qv[0], Aw, ncol, lam)
            gv[i, j] = (val - base) / step
            Aw[i * ncol + j] = Av[i, j]
    return grad


def surrogate_eval(const double[:, :, ::1] dirs, const double[:, ::1] amp,
                   const double[:, ::1] ang, q, double lam):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t K = dirs.shape[0], L = dirs.shape[1], k, l
    cdef double ups, val = 0.0, s
    cdef double g0 = 0.0, g1 = 0.0, g2 = 0.0
    cdef double w = 2.0 * PI / lam
    for k in range(K):
        for l in range(L):
            ups = w * (dirs[k, l, 0] * qv[0] + dirs[k, l, 1] * qv[1] + dirs[k, l, 2] * qv[2]) - ang[k, l]
            val += 2.0 * amp[k, l] * cos(ups)
            s = amp[k, l] * sin(ups)
            g0 += s * dirs[k, l, 0]
            g1 += s * dirs[k, l, 1]
            g2 += s * dirs[k, l, 2]
    grad = np.array([g0, g1, g2]) * (-2.0 * w)
    return val, grad

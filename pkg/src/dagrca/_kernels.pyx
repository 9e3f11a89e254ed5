# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Same signatures and semantics as ``_kernels_py``. The MLP loops live in
``_mlp_core.h``: they fuse both layers over small row blocks so the
(rows x hidden) activation matrix is never materialized. For the tiny
per-variable MLPs used in training that buffer traffic is what dominates
the numpy version.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"


cdef extern from "_mlp_core.h" nogil:
    int mlp_forward_core(Py_ssize_t N, Py_ssize_t din, Py_ssize_t H, Py_ssize_t dout,
                         const double *x, const double *W1, const double *b1,
                         const double *W2, const double *b2, double *out)
    int mlp_backward_core(Py_ssize_t N, Py_ssize_t din, Py_ssize_t H, Py_ssize_t dout,
                          const double *x, const double *W1, const double *b1,
                          const double *W2, const double *g, double *gx,
                          double *gW1, double *gb1, double *gW2, double *gb2)


def _check_mlp(x, W1, b1, W2):
    if W1.shape[0] != x.shape[1] or b1.shape[0] != W1.shape[1] or W2.shape[0] != W1.shape[1]:
        raise ValueError("inconsistent MLP shapes")


def mlp_forward(const double[:, ::1] x, const double[:, ::1] W1,
                const double[::1] b1, const double[:, ::1] W2,
                const double[::1] b2):
    cdef Py_ssize_t N = x.shape[0], din = x.shape[1]
    cdef Py_ssize_t H = W1.shape[1], dout = W2.shape[1]
    cdef int rc
    _check_mlp(x, W1, b1, W2)
    if b2.shape[0] != dout:
        raise ValueError("inconsistent MLP shapes")
    out_arr = np.empty((N, dout), dtype=np.float64)
    if N == 0:
        return out_arr
    cdef double[:, ::1] out = out_arr
    with nogil:
        rc = mlp_forward_core(N, din, H, dout, &x[0, 0], &W1[0, 0], &b1[0],
                              &W2[0, 0], &b2[0], &out[0, 0])
    if rc:
        raise MemoryError()
    return out_arr


def mlp_backward(const double[:, ::1] x, const double[:, ::1] W1,
                 const double[::1] b1, const double[:, ::1] W2,
                 const double[:, ::1] gout):
    cdef Py_ssize_t N = x.shape[0], din = x.shape[1]
    cdef Py_ssize_t H = W1.shape[1], dout = W2.shape[1]
    cdef int rc
    _check_mlp(x, W1, b1, W2)
    if gout.shape[0] != N or gout.shape[1] != dout:
        raise ValueError("output adjoint has the wrong shape")
    gx_arr = np.empty((N, din), dtype=np.float64)
    gW1_arr = np.zeros((din, H), dtype=np.float64)
    gb1_arr = np.zeros(H, dtype=np.float64)
    gW2_arr = np.zeros((H, dout), dtype=np.float64)
    gb2_arr = np.zeros(dout, dtype=np.float64)
    if N == 0:
        return gx_arr, gW1_arr, gb1_arr, gW2_arr, gb2_arr
    cdef double[:, ::1] gx = gx_arr
    cdef double[:, ::1] gW1 = gW1_arr
    cdef double[::1] gb1 = gb1_arr
    cdef double[:, ::1] gW2 = gW2_arr
    cdef double[::1] gb2 = gb2_arr
    with nogil:
        rc = mlp_backward_core(N, din, H, dout, &x[0, 0], &W1[0, 0], &b1[0], &W2[0, 0],
                               &gout[0, 0], &gx[0, 0], &gW1[0, 0], &gb1[0],
                               &gW2[0, 0], &gb2[0])
    if rc:
        raise MemoryError()
    return gx_arr, gW1_arr, gb1_arr, gW2_arr, gb2_arr


cdef void _matmul(double *a, double *b, double *c, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double aik
    for i in range(n * n):
        c[i] = 0.0
    for i in range(n):
        for k in range(n):
            aik = a[i * n + k]
            if aik != 0.0:
                for j in range(n):
                    c[i * n + j] += aik * b[k * n + j]


def acyclicity(const double[:, ::1] A, double alpha):
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t i, j, e
    cdef double h = 0.0
    if m == 0:
        return 0.0, np.empty((0, 0), dtype=np.float64)
    M_arr = np.empty((m, m), dtype=np.float64)
    grad_arr = np.empty((m, m), dtype=np.float64)
    cdef double[:, ::1] M = M_arr
    cdef double[:, ::1] grad = grad_arr
    cdef double *base = <double *> malloc(m * m * sizeof(double))
    cdef double *res = <double *> malloc(m * m * sizeof(double))
    cdef double *tmp = <double *> malloc(m * m * sizeof(double))
    if base == NULL or res == NULL or tmp == NULL:
        free(base)
        free(res)
        free(tmp)
        raise MemoryError()
    with nogil:
        for i in range(m):
            for j in range(m):
                M[i, j] = alpha * A[i, j] * A[i, j]
                res[i * m + j] = 0.0
            M[i, i] += 1.0
            res[i * m + i] = 1.0
        for i in range(m):
            for j in range(m):
                base[i * m + j] = M[i, j]
        # res = M^(m-1) by binary exponentiation
        e = m - 1
        while e > 0:
            if e & 1:
                _matmul(res, base, tmp, m)
                for i in range(m * m):
                    res[i] = tmp[i]
            e >>= 1
            if e:
                _matmul(base, base, tmp, m)
                for i in range(m * m):
                    base[i] = tmp[i]
        for i in range(m):
            for j in range(m):
                h += res[i * m + j] * M[j, i]
                grad[i, j] = m * 2.0 * alpha * res[j * m + i] * A[i, j]
    free(base)
    free(res)
    free(tmp)
    return h - m, grad_arr


def lu_inverse(const double[:, ::1] a):
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t i, j, k, p
    cdef double piv, best, f, min_pivot = INFINITY, tmp
    lu_arr = np.array(a, dtype=np.float64, copy=True)
    inv_arr = np.eye(n, dtype=np.float64)
    cdef double[:, ::1] lu = lu_arr
    cdef double[:, ::1] inv = inv_arr
    cdef bint singular = False
    with nogil:
        for k in range(n):
            p = k
            best = fabs(lu[k, k])
            for i in range(k + 1, n):
                if fabs(lu[i, k]) > best:
                    best = fabs(lu[i, k])
                    p = i
            if best < min_pivot:
                min_pivot = best
            if best == 0.0:
                singular = True
                break
            if p != k:
                for j in range(n):
                    tmp = lu[k, j]
                    lu[k, j] = lu[p, j]
                    lu[p, j] = tmp
                    tmp = inv[k, j]
                    inv[k, j] = inv[p, j]
                    inv[p, j] = tmp
            piv = lu[k, k]
            for i in range(k + 1, n):
                f = lu[i, k] / piv
                lu[i, k] = f
                if f != 0.0:
                    for j in range(k + 1, n):
                        lu[i, j] -= f * lu[k, j]
                    # forward substitution folded into elimination
                    for j in range(n):
                        inv[i, j] -= f * inv[k, j]
        if not singular:
            for i in range(n - 1, -1, -1):
                for k in range(i + 1, n):
                    f = lu[i, k]
                    if f != 0.0:
                        for j in range(n):
                            inv[i, j] -= f * inv[k, j]
                f = lu[i, i]
                for j in range(n):
                    inv[i, j] /= f
    if singular:
        return None, 0.0
    return inv_arr, min_pivot


def pagerank_power(const double[:, ::1] P, double alpha, double tol, long max_iter):
    cdef Py_ssize_t n = P.shape[0]
    cdef Py_ssize_t i, j
    cdef long it
    cdef double spread, delta, total, teleport = (1.0 - alpha) / n, s
    v_arr = np.full(n, 1.0 / n)
    nv_arr = np.empty(n, dtype=np.float64)
    dang_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] v = v_arr
    cdef double[::1] nv = nv_arr
    cdef unsigned char[::1] dangling = dang_arr
    cdef bint converged = False
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(n):
                s += P[i, j]
            dangling[i] = s == 0.0
        it = 0
        while it < max_iter:
            it += 1
            spread = 0.0
            for i in range(n):
                if dangling[i]:
                    spread += v[i]
            spread /= n
            for j in range(n):
                nv[j] = 0.0
            for i in range(n):
                s = v[i]
                if s != 0.0 and not dangling[i]:
                    for j in range(n):
                        nv[j] += s * P[i, j]
            delta = 0.0
            for j in range(n):
                nv[j] = alpha * (nv[j] + spread) + teleport
                delta += fabs(nv[j] - v[j])
                v[j] = nv[j]
            if delta < tol:
                converged = True
                break
        total = 0.0
        for j in range(n):
            total += v[j]
        for j in range(n):
            v[j] /= total
    return v_arr, it, converged

"""Pure numpy implementations of the hot kernels.

Mirrors ``_kernels.pyx`` function for function. Used when the compiled
extension is unavailable or ``DAGRCA_PURE_PYTHON=1`` is set.
"""
import numpy as np

BACKEND = "python"


def mlp_forward(x, W1, b1, W2, b2):
    """Row-wise two-layer ReLU MLP: ``relu(x @ W1 + b1) @ W2 + b2``."""
    hidden = x @ W1
    hidden += b1
    np.maximum(hidden, 0.0, out=hidden)
    out = hidden @ W2
    out += b2
    return out


def mlp_backward(x, W1, b1, W2, gout):
    """Gradients of :func:`mlp_forward` given the output adjoint ``gout``.

    Returns ``(gx, gW1, gb1, gW2, gb2)``. The hidden layer is recomputed
    rather than cached.
    """
    pre = x @ W1
    pre += b1
    act = np.maximum(pre, 0.0)
    gW2 = act.T @ gout
    gb2 = gout.sum(axis=0)
    gpre = gout @ W2.T
    gpre *= pre > 0.0
    gW1 = x.T @ gpre
    gb1 = gpre.sum(axis=0)
    gx = gpre @ W1.T
    return gx, gW1, gb1, gW2, gb2


def _power(M, k):
    m = M.shape[0]
    result = np.eye(m)
    base = M.copy()
    while k > 0:
        if k & 1:
            result = result @ base
        k >>= 1
        if k:
            base = base @ base
    return result


def acyclicity(A, alpha):
    """Return ``(h, dh/dA)`` for ``h = tr[(I + alpha A*A)^m] - m``."""
    m = A.shape[0]
    M = np.eye(m) + alpha * A * A
    Mp = _power(M, m - 1)
    h = float(np.sum(Mp * M.T)) - m
    grad = (m * 2.0 * alpha) * Mp.T * A
    return h, grad


def lu_inverse(a):
    """Invert ``a`` by LU factorization with partial pivoting.

    Returns ``(inverse, min_abs_pivot)``; ``inverse`` is ``None`` when an
    exactly-zero pivot is met.
    """
    n = a.shape[0]
    lu = np.array(a, dtype=np.float64, copy=True)
    perm = np.arange(n)
    min_pivot = np.inf
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        piv = abs(lu[p, k])
        min_pivot = min(min_pivot, piv)
        if piv == 0.0:
            return None, 0.0
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    # solve L U X = P I column block at once
    rhs = np.eye(n)[perm]
    for i in range(n):
        rhs[i] -= lu[i, :i] @ rhs[:i]
    for i in range(n - 1, -1, -1):
        rhs[i] -= lu[i, i + 1:] @ rhs[i + 1:]
        rhs[i] /= lu[i, i]
    return rhs, float(min_pivot)


def pagerank_power(P, alpha, tol, max_iter):
    """Power iteration for ``v = alpha (P^T v + dangling) + (1 - alpha)/n``.

    Rows of ``P`` that are all zero are dangling; their mass is spread
    uniformly. Returns ``(v, iterations, converged)``.
    """
    n = P.shape[0]
    dangling = P.sum(axis=1) == 0.0
    v = np.full(n, 1.0 / n)
    PT = np.ascontiguousarray(P.T)
    teleport = (1.0 - alpha) / n
    for it in range(1, max_iter + 1):
        spread = v[dangling].sum() / n
        nv = alpha * (PT @ v + spread) + teleport
        delta = np.abs(nv - v).sum()
        v = nv
        if delta < tol:
            return v / v.sum(), it, True
    return v / v.sum(), max_iter, False

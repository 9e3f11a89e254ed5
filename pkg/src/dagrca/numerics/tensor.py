"""Dense float64 tensors with tape-based reverse-mode differentiation.

Usage::

    w = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        loss = tsum(matmul(w, w))
    grads = tape.backward(loss)     # {w: ndarray}

Operations always compute values. They are recorded only while a tape is
active and at least one input requires a gradient.
"""
import threading

import numpy as np

from .. import kernels
from ..errors import ContractError, DimensionError, SingularMatrixError, StateError

DEFAULT_CONDITION_CAP = 1e12

_local = threading.local()


def _tape_stack():
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


def active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Immutable-by-convention wrapper around a float64 ndarray."""

    __slots__ = ("value", "requires_grad", "op", "parents", "backward_fn", "__weakref__")

    def __init__(self, value, requires_grad=False):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.op = "leaf"
        self.parents = ()
        self.backward_fn = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def size(self):
        return self.value.size

    @property
    def T(self):
        return transpose(self)

    def numpy(self):
        return self.value

    def item(self):
        return float(self.value.reshape(-1)[0]) if self.value.size == 1 else self.value.item()

    def __repr__(self):
        tag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, op={self.op}{tag})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Records operations in execution order for a single backward pass."""

    def __init__(self):
        self.nodes = []
        self._used = False

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        _tape_stack().remove(self)
        return False

    def reset(self):
        self.nodes = []
        self._used = False

    def backward(self, loss):
        """Populate adjoints from a scalar ``loss``.

        Returns a dict mapping each leaf tensor with ``requires_grad`` to its
        gradient array. Every recorded node's adjoint is available through
        :meth:`adjoint` until :meth:`reset`.
        """
        if self._used:
            raise StateError("backward already ran on this tape; call reset() first")
        if loss.size != 1:
            raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
        self._used = True
        adj = {id(loss): np.ones_like(loss.value)}
        self._adjoints = adj
        keep = {id(loss): loss}
        for node in reversed(self.nodes):
            g = adj.get(id(node))
            if g is None:
                continue
            grads = node.backward_fn(g)
            for parent, pg in zip(node.parents, grads):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in adj:
                    adj[key] = adj[key] + pg
                else:
                    adj[key] = pg
                    keep[key] = parent
        self._keep = keep
        return {t: adj[k] for k, t in keep.items() if t.op == "leaf"}

    def adjoint(self, tensor):
        return self._adjoints.get(id(tensor))


def record(value, parents, backward_fn, op):
    """Create an op result; put it on the active tape when gradients flow.

    ``backward_fn(g)`` must return one gradient (or None) per parent.
    """
    out = Tensor(value)
    out.op = op
    if any(p.requires_grad for p in parents):
        tape = active_tape()
        if tape is not None:
            out.requires_grad = True
            out.parents = tuple(parents)
            out.backward_fn = backward_fn
            tape.nodes.append(out)
    return out


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a, b):
    if not isinstance(b, Tensor) and np.isscalar(b):
        a = as_tensor(a)
        return record(a.value + b, (a,), lambda g: (g,), "add_scalar")
    if not isinstance(a, Tensor) and np.isscalar(a):
        return add(b, a)
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "add")
    return record(a.value + b.value, (a, b), lambda g: (g, g), "add")


def sub(a, b):
    if not isinstance(b, Tensor) and np.isscalar(b):
        return add(a, -b)
    if not isinstance(a, Tensor) and np.isscalar(a):
        b = as_tensor(b)
        return record(a - b.value, (b,), lambda g: (-g,), "rsub_scalar")
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "sub")
    return record(a.value - b.value, (a, b), lambda g: (g, -g), "sub")


def mul(a, b):
    if not isinstance(b, Tensor) and np.isscalar(b):
        return scale(a, b)
    if not isinstance(a, Tensor) and np.isscalar(a):
        return scale(b, a)
    a, b = as_tensor(a), as_tensor(b)
    _same_shape(a, b, "mul")
    av, bv = a.value, b.value
    return record(av * bv, (a, b), lambda g: (g * bv, g * av), "mul")


def scale(a, s):
    a = as_tensor(a)
    s = float(s)
    return record(a.value * s, (a,), lambda g: (g * s,), "scale")


def square(a):
    a = as_tensor(a)
    av = a.value
    return record(av * av, (a,), lambda g: (2.0 * g * av,), "square")


def exp(a):
    a = as_tensor(a)
    out = np.exp(a.value)
    return record(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    a = as_tensor(a)
    av = a.value
    if np.any(av <= 0.0):
        raise ContractError("log of non-positive entries")
    return record(np.log(av), (a,), lambda g: (g / av,), "log")


def tsum(a):
    a = as_tensor(a)
    shape = a.shape
    return record(np.array(a.value.sum()), (a,), lambda g: (np.full(shape, float(g)),), "sum")


def transpose(a):
    a = as_tensor(a)
    if a.value.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {a.shape}")
    return record(a.value.T.copy(), (a,), lambda g: (g.T.copy(),), "transpose")


def reshape(a, shape):
    a = as_tensor(a)
    old = a.shape
    try:
        out = a.value.reshape(shape)
    except ValueError as exc:
        raise DimensionError(f"cannot reshape {old} to {shape}") from exc
    return record(out, (a,), lambda g: (g.reshape(old),), "reshape")


def take_last(a, start, stop):
    """Slice ``a[..., start:stop]`` (splits stacked output heads)."""
    a = as_tensor(a)
    shape = a.shape

    def back(g):
        full = np.zeros(shape)
        full[..., start:stop] = g
        return (full,)

    return record(np.ascontiguousarray(a.value[..., start:stop]), (a,), back, "slice")


def trace(a):
    a = as_tensor(a)
    if a.value.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"trace expects a square matrix, got shape {a.shape}")
    n = a.shape[0]
    return record(np.array(np.trace(a.value)), (a,), lambda g: (float(g) * np.eye(n),), "trace")


def matmul(a, b):
    """Matrix product of two 2-D tensors."""
    a, b = as_tensor(a), as_tensor(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: shapes {a.shape} and {b.shape} are not aligned")
    av, bv = a.value, b.value
    return record(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g), "matmul")


def _require_square(a, op):
    if a.value.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{op} expects a square matrix, got shape {a.shape}")


def matrix_power(a, k):
    """``a`` multiplied by itself ``k`` times (k >= 1)."""
    a = as_tensor(a)
    _require_square(a, "matrix_power")
    if int(k) != k or k < 1:
        raise ContractError(f"matrix_power needs a positive integer exponent, got {k}")
    k = int(k)
    av = a.value
    powers = [np.eye(a.shape[0]), av]
    for _ in range(2, k + 1):
        powers.append(powers[-1] @ av)

    def back(g):
        # d tr(G^T A^k) = sum_j (A^j)^T G (A^(k-1-j))^T
        total = np.zeros_like(av)
        for j in range(k):
            total += powers[j].T @ g @ powers[k - 1 - j].T
        return (total,)

    return record(powers[k].copy(), (a,), back, "matrix_power")


def solve_or_invert(a, condition_cap=DEFAULT_CONDITION_CAP):
    """Inverse of a square matrix via LU with partial pivoting.

    Raises :class:`SingularMatrixError` when a zero pivot is met or the
    1-norm condition estimate exceeds ``condition_cap``.
    """
    a = as_tensor(a)
    _require_square(a, "solve_or_invert")
    av = np.ascontiguousarray(a.value)
    inv, pivot = kernels.lu_inverse(av)
    if inv is None:
        raise SingularMatrixError("matrix is singular (zero pivot)", pivot=0.0)
    cond = np.abs(av).sum(axis=0).max() * np.abs(inv).sum(axis=0).max()
    if not np.isfinite(cond) or cond > condition_cap:
        raise SingularMatrixError(
            f"matrix is ill-conditioned (cond~{cond:.3g}, min pivot {pivot:.3g})",
            pivot=pivot, condition=cond,
        )
    return record(inv, (a,), lambda g: (-(inv.T @ g @ inv.T),), "inverse")


def mlp(x, W1, b1, W2, b2):
    """Two-layer ReLU perceptron applied independently along the last axis.

    ``x`` has shape ``(..., d_in)``; the result has shape ``(..., d_out)``.
    """
    x, W1, b1, W2, b2 = (as_tensor(t) for t in (x, W1, b1, W2, b2))
    d_in = W1.shape[0]
    if x.shape[-1] != d_in or W2.shape[0] != W1.shape[1]:
        raise DimensionError(
            f"mlp: input {x.shape} incompatible with weights {W1.shape}, {W2.shape}"
        )
    lead = x.shape[:-1]
    rows = np.ascontiguousarray(x.value.reshape(-1, d_in))
    w1, bb1, w2 = W1.value, b1.value, W2.value
    out = kernels.mlp_forward(rows, w1, bb1, w2, b2.value)

    def back(g):
        gx, gW1, gb1, gW2, gb2 = kernels.mlp_backward(
            rows, w1, bb1, w2, np.ascontiguousarray(g.reshape(rows.shape[0], -1))
        )
        return gx.reshape(x.shape), gW1, gb1, gW2, gb2

    return record(out.reshape(lead + (W2.shape[1],)), (x, W1, b1, W2, b2), back, "mlp")


def mix(M, H):
    """Contract a variable-mixing matrix over axis 1 of ``H``.

    ``out[s, i, :] = sum_j M[i, j] * H[s, j, :]`` for ``H`` of shape
    ``(n, m, d)`` and ``M`` of shape ``(m, m)``.
    """
    M, H = as_tensor(M), as_tensor(H)
    if M.value.ndim != 2 or H.value.ndim != 3 or M.shape[1] != H.shape[1]:
        raise DimensionError(f"mix: shapes {M.shape} and {H.shape} are not aligned")
    Mv, Hv = M.value, H.value
    out = np.ascontiguousarray(np.tensordot(Hv, Mv, axes=([1], [1])).transpose(0, 2, 1))

    def back(g):
        gM = np.tensordot(g, Hv, axes=([0, 2], [0, 2]))
        gH = np.ascontiguousarray(np.tensordot(g, Mv, axes=([1], [0])).transpose(0, 2, 1))
        return gM, gH

    return record(out, (M, H), back, "mix")

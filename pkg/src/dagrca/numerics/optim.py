"""Adam with bias correction over a list of parameter arrays."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError


@dataclass
class AdamState:
    first: list = field(default_factory=list)
    second: list = field(default_factory=list)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, **kw):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **kw)


def adam_step(params, grads, state, lr):
    """One Adam update. Returns ``(new_params, state)``; inputs are not mutated
    except ``state``, whose moments and step counter advance."""
    if not (len(params) == len(grads) == len(state.first) == len(state.second)):
        raise DimensionError("adam_step: parameter, gradient and state counts differ")
    for p, g, m in zip(params, grads, state.first):
        if np.shape(p) != np.shape(g) or np.shape(p) != np.shape(m):
            raise DimensionError(
                f"adam_step: parameter {np.shape(p)}, gradient {np.shape(g)}, "
                f"moment {np.shape(m)} disagree"
            )
    state.step += 1
    b1, b2, t = state.beta1, state.beta2, state.step
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        m = state.first[i] = b1 * state.first[i] + (1.0 - b1) * g
        v = state.second[i] = b2 * state.second[i] + (1.0 - b2) * (g * g)
        out.append(p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
    return out, state

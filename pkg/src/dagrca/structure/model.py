"""Variational autoencoder whose mixing layer is the weighted adjacency.

Shapes follow the sample-major convention ``(n samples, m variables, d)``:

* encoder: ``X -> f3 -> (I - A^T) -> f4 -> (mu_Z, logvar_Z)``
* decoder: ``Z -> f1 -> (I - A^T)^-1 -> f2 -> (mu_X, logvar_X)``

Each ``f`` is a two-layer ReLU MLP shared across variables and applied to
each variable's feature vector independently, so ``A`` is the only place
variables interact.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DimensionError
from ..numerics import tensor as T
from ..numerics.tensor import Tensor


@dataclass(frozen=True)
class MLPParams:
    W1: Tensor
    b1: Tensor
    W2: Tensor
    b2: Tensor

    @classmethod
    def init(cls, d_in, hidden, d_out, rng, scale=0.1):
        return cls(
            Tensor(rng.uniform(-scale, scale, (d_in, hidden)), requires_grad=True),
            Tensor(np.zeros(hidden), requires_grad=True),
            Tensor(rng.uniform(-scale, scale, (hidden, d_out)), requires_grad=True),
            Tensor(np.zeros(d_out), requires_grad=True),
        )

    @classmethod
    def identity(cls, d, heads=1, hidden=None):
        """Exact identity on the first ``d`` outputs via relu(x) - relu(-x).

        Extra heads (``heads > 1``) output zeros, e.g. a log-variance of 0.
        """
        hidden = 2 * d if hidden is None else hidden
        if hidden < 2 * d:
            raise ContractError(f"identity MLP needs hidden >= {2 * d}")
        W1 = np.zeros((d, hidden))
        W2 = np.zeros((hidden, d * heads))
        for i in range(d):
            W1[i, i], W1[i, d + i] = 1.0, -1.0
            W2[i, i], W2[d + i, i] = 1.0, -1.0
        return cls(Tensor(W1, True), Tensor(np.zeros(hidden), True),
                   Tensor(W2, True), Tensor(np.zeros(d * heads), True))

    def tensors(self):
        return [self.W1, self.b1, self.W2, self.b2]

    def __call__(self, x):
        return T.mlp(x, self.W1, self.b1, self.W2, self.b2)


MLP_NAMES = ("f1", "f2", "f3", "f4")


@dataclass(frozen=True)
class ModelParams:
    A: Tensor
    f1: MLPParams
    f2: MLPParams
    f3: MLPParams
    f4: MLPParams

    @classmethod
    def initialize(cls, m, rng, hidden=64, latent_dim=1, init_scale=0.1):
        """Zero adjacency (a feasible DAG) and uniform small MLP weights."""
        d = latent_dim
        return cls(
            A=Tensor(np.zeros((m, m)), requires_grad=True),
            f1=MLPParams.init(d, hidden, d, rng.split("f1"), init_scale),
            f2=MLPParams.init(d, hidden, 2, rng.split("f2"), init_scale),
            f3=MLPParams.init(1, hidden, d, rng.split("f3"), init_scale),
            f4=MLPParams.init(d, hidden, 2 * d, rng.split("f4"), init_scale),
        )

    @property
    def n_vars(self):
        return self.A.shape[0]

    @property
    def latent_dim(self):
        return self.f3.W2.shape[1]

    def leaves(self):
        out = [self.A]
        for name in MLP_NAMES:
            out.extend(getattr(self, name).tensors())
        return out

    def names(self):
        out = ["A"]
        for name in MLP_NAMES:
            out.extend(f"{name}.{p}" for p in ("W1", "b1", "W2", "b2"))
        return out

    def arrays(self):
        return [t.value for t in self.leaves()]

    def with_arrays(self, arrays):
        """New parameter set with fresh leaf tensors holding ``arrays``."""
        it = iter(arrays)
        A = Tensor(next(it), requires_grad=True)
        mlps = {}
        for name in MLP_NAMES:
            mlps[name] = MLPParams(*(Tensor(next(it), requires_grad=True) for _ in range(4)))
        return ModelParams(A=A, **mlps)


def _mixing(A):
    m = A.shape[0]
    return T.sub(Tensor(np.eye(m)), T.transpose(A))


def _check_frame(X, params):
    X = T.as_tensor(X)
    if X.value.ndim != 2 or X.shape[1] != params.n_vars:
        raise DimensionError(
            f"expected (n, {params.n_vars}) samples for {params.n_vars} variables, got {X.shape}"
        )
    return X


def encode(X, params):
    """``X`` (n x m) -> ``(mu_Z, sigma_Z)``, each (n x m x latent_dim)."""
    X = _check_frame(X, params)
    n, m = X.shape
    d = params.latent_dim
    h = params.f3(T.reshape(X, (n, m, 1)))
    h = T.mix(_mixing(params.A), h)
    out = params.f4(h)
    mu = T.take_last(out, 0, d)
    sigma = T.exp(T.scale(T.take_last(out, d, 2 * d), 0.5))
    return mu, sigma


def decode(Z, params, condition_cap=T.DEFAULT_CONDITION_CAP):
    """``Z`` (n x m x latent_dim) -> ``(mu_X, sigma_X)``, each (n x m).

    Raises :class:`~dagrca.errors.SingularMatrixError` if ``I - A^T`` cannot
    be inverted, which means ``A`` has drifted onto a unit-gain cycle.
    """
    Z = T.as_tensor(Z)
    if Z.value.ndim != 3 or Z.shape[1] != params.n_vars or Z.shape[2] != params.latent_dim:
        raise DimensionError(
            f"latent must be (n, {params.n_vars}, {params.latent_dim}), got {Z.shape}"
        )
    n, m, _ = Z.shape
    h = params.f1(Z)
    h = T.mix(T.solve_or_invert(_mixing(params.A), condition_cap), h)
    out = params.f2(h)
    mu = T.reshape(T.take_last(out, 0, 1), (n, m))
    sigma = T.exp(T.scale(T.reshape(T.take_last(out, 1, 2), (n, m)), 0.5))
    return mu, sigma


def kl_standard_normal(mu, sigma, n):
    """KL(N(mu, sigma^2) || N(0, 1)) summed over entries, divided by ``n``."""
    mu, sigma = T.as_tensor(mu), T.as_tensor(sigma)
    if np.any(sigma.value <= 0.0):
        raise ContractError("posterior standard deviations must be positive")
    terms = T.square(mu) + T.square(sigma) - 1.0 - T.scale(T.log(sigma), 2.0)
    return T.scale(T.tsum(terms), 0.5 / n)


def reconstruction_term(X, mu_X, c_rec):
    """``-||X - mu_X||_F^2 / (2 c_rec n)`` (per-sample average)."""
    X, mu_X = T.as_tensor(X), T.as_tensor(mu_X)
    n = X.shape[0]
    return T.scale(T.tsum(T.square(X - mu_X)), -0.5 / (c_rec * n))


def elbo(X, mu_X, mu_Z, sigma_Z, c_rec=1.0):
    """Evidence lower bound averaged over samples (to be maximized)."""
    X = T.as_tensor(X)
    if c_rec <= 0:
        raise ContractError("reconstruction variance constant must be positive")
    n = X.shape[0]
    return reconstruction_term(X, mu_X, c_rec) - kl_standard_normal(mu_Z, sigma_Z, n)


def sample_elbo(X, params, noise, c_rec=1.0, condition_cap=T.DEFAULT_CONDITION_CAP):
    """One reparameterized ELBO estimate: ``Z = mu_Z + sigma_Z * noise``."""
    mu_z, sigma_z = encode(X, params)
    z = mu_z + sigma_z * T.as_tensor(noise)
    mu_x, _ = decode(z, params, condition_cap)
    return elbo(X, mu_x, mu_z, sigma_z, c_rec)

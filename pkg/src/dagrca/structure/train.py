"""Augmented-Lagrangian training of the adjacency under the acyclicity constraint."""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import kernels
from ..errors import ContractError, DimensionError, NumericError, TrainingError
from ..graph import WeightedDag
from ..numerics import tensor as T
from ..numerics.optim import AdamState, adam_step
from ..numerics.rng import Rng
from .model import ModelParams, sample_elbo

log = logging.getLogger(__name__)


@dataclass
class StructureLearnConfig:
    lr: float = 1e-3
    epochs_per_outer: int = 1000
    max_outer_iterations: int = 10
    h_tolerance: float = 1e-8
    acyclicity_alpha: float = None  # None -> 1/m
    latent_dim: int = 1
    hidden_dim: int = 64
    c_rec: float = 1.0
    seed: int = 0
    eta: float = 10.0
    gamma: float = 0.25
    penalty_init: float = 1.0
    init_scale: float = 0.1
    condition_cap: float = T.DEFAULT_CONDITION_CAP

    def __post_init__(self):
        for name in ("lr", "h_tolerance", "c_rec", "penalty_init", "init_scale", "condition_cap"):
            if not getattr(self, name) > 0:
                raise ContractError(f"{name} must be positive")
        for name in ("epochs_per_outer", "max_outer_iterations", "latent_dim", "hidden_dim"):
            if int(getattr(self, name)) < 1:
                raise ContractError(f"{name} must be a positive integer")
        if self.acyclicity_alpha is not None and not self.acyclicity_alpha > 0:
            raise ContractError("acyclicity_alpha must be positive")
        if not self.eta > 1 or not 0 < self.gamma < 1:
            raise ContractError("need eta > 1 and 0 < gamma < 1")

    def alpha_for(self, m):
        return 1.0 / m if self.acyclicity_alpha is None else self.acyclicity_alpha

    def to_dict(self):
        return asdict(self)


@dataclass
class LagrangianState:
    """Multiplier ``lam`` and penalty ``c`` of the augmented Lagrangian."""

    lam: float = 0.0
    c: float = 1.0
    eta: float = 10.0
    gamma: float = 0.25
    previous_h: float = float("inf")

    def update(self, h):
        """Apply one outer-iteration update given the constraint value ``h``.

        ``lam += c * h`` uses the penalty in force during the iteration; ``c``
        grows by ``eta`` unless ``|h|`` shrank below ``gamma * |h_prev|``.
        """
        self.lam = self.lam + self.c * h
        if abs(h) > self.gamma * abs(self.previous_h):
            self.c = self.eta * self.c
        self.previous_h = h
        return self


def acyclicity(A, alpha):
    """``tr[(I + alpha A*A)^m] - m`` as a differentiable scalar.

    Zero exactly when the support of ``A`` has no directed cycle.
    """
    A = T.as_tensor(A)
    if A.value.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"acyclicity expects a square matrix, got shape {A.shape}")
    if not alpha > 0:
        raise ContractError("alpha must be positive")
    h, grad = kernels.acyclicity(np.ascontiguousarray(A.value), float(alpha))
    return T.record(np.array(h), (A,), lambda g: (float(g) * grad,), "acyclicity")


def acyclicity_value(A, alpha):
    return float(kernels.acyclicity(np.ascontiguousarray(A, dtype=np.float64), float(alpha))[0])


def augmented_lagrangian_loss(elbo_value, A, lag, alpha):
    """``-ELBO + lam * h(A) + (c / 2) * h(A)^2`` (to be minimized)."""
    if not lag.c > 0:
        raise ContractError("penalty parameter must be positive")
    h = acyclicity(A, alpha)
    return T.scale(elbo_value, -1.0) + T.scale(h, lag.lam) + T.scale(T.square(h), 0.5 * lag.c)


@dataclass
class OuterRecord:
    iteration: int
    h: float
    h_previous: float
    lam_before: float
    c_before: float
    lam_after: float
    c_after: float
    loss: float
    neg_elbo: float


@dataclass
class TrainResult:
    dag: WeightedDag
    h: float
    converged: bool
    outer_iterations: int
    trace: list = field(default_factory=list)
    params: ModelParams = None

    @property
    def warning(self):
        """True when the constraint tolerance was never reached."""
        return not self.converged


def _clean_adjacency(A, degenerate):
    A = A.copy()
    np.fill_diagonal(A, 0.0)
    if degenerate is not None and degenerate.any():
        A[degenerate, :] = 0.0
        A[:, degenerate] = 0.0
    return A


def train(frame, cfg=None):
    """Learn a weighted DAG over ``frame``'s metrics.

    Runs at most ``cfg.max_outer_iterations`` outer Lagrangian iterations,
    each made of ``cfg.epochs_per_outer`` full-batch Adam steps. Stops early
    once ``h(A) < cfg.h_tolerance``. Without convergence the iterate with the
    smallest ``h`` is returned and ``TrainResult.warning`` is set.
    """
    cfg = cfg or StructureLearnConfig()
    X = np.ascontiguousarray(frame.data, dtype=np.float64)
    n, m = X.shape
    alpha = cfg.alpha_for(m)
    root = Rng(cfg.seed)
    params = ModelParams.initialize(m, root.split("init"), cfg.hidden_dim, cfg.latent_dim,
                                    cfg.init_scale)
    noise_rng = root.split("reparameterize")
    arrays = params.arrays()
    adam = AdamState.zeros_like(arrays)
    lag = LagrangianState(c=cfg.penalty_init, eta=cfg.eta, gamma=cfg.gamma)
    Xt = T.Tensor(X)
    trace = []
    best = None
    converged = False
    h = acyclicity_value(arrays[0], alpha)

    for outer in range(cfg.max_outer_iterations):
        loss_v = neg_elbo_v = float("nan")
        for step in range(cfg.epochs_per_outer):
            noise = noise_rng.normal((n, m, cfg.latent_dim))
            try:
                with T.Tape() as tape:
                    e = sample_elbo(Xt, params, noise, cfg.c_rec, cfg.condition_cap)
                    loss = augmented_lagrangian_loss(e, params.A, lag, alpha)
            except NumericError as exc:
                raise TrainingError(f"outer {outer} step {step}: {exc}", outer, step) from exc
            loss_v = loss.item()
            if not np.isfinite(loss_v):
                raise TrainingError(f"loss is {loss_v} at outer {outer} step {step}", outer, step)
            grads = tape.backward(loss)
            leaves = params.leaves()
            arrays, adam = adam_step(arrays, [grads[t] for t in leaves], adam, cfg.lr)
            np.fill_diagonal(arrays[0], 0.0)
            if not all(np.all(np.isfinite(a)) for a in arrays):
                raise TrainingError(f"non-finite parameters at outer {outer} step {step}",
                                    outer, step)
            params = params.with_arrays(arrays)
            neg_elbo_v = -e.item()

        h = acyclicity_value(arrays[0], alpha)
        lam_before, c_before, h_prev = lag.lam, lag.c, lag.previous_h
        lag.update(h)
        trace.append(OuterRecord(outer, h, h_prev, lam_before, c_before, lag.lam, lag.c,
                                 loss_v, neg_elbo_v))
        log.info("outer %d: h=%.3e lambda=%.3e c=%.1e -neg_elbo=%.4f",
                 outer, h, lag.lam, lag.c, neg_elbo_v)
        if best is None or h < best[0]:
            best = (h, params)
        if h < cfg.h_tolerance:
            converged = True
            break

    if not converged:
        h, params = best
        log.warning("acyclicity tolerance %.1e not reached; returning iterate with h=%.3e",
                    cfg.h_tolerance, h)
    A = _clean_adjacency(params.A.value, frame.degenerate)
    dag = WeightedDag(A, frame.metric_ids)
    return TrainResult(dag=dag, h=h, converged=converged, outer_iterations=len(trace),
                       trace=trace, params=params)

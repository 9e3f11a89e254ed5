"""Ground-truth cases from linear SEMs with injected faults.

Faults are interventions on one node's exogenous noise after an onset index.
The SEM is linear, so the disturbance reaches every descendant scaled by the
product of edge weights along each path.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from ..graph import has_cycle, topological_order
from ..ingestion.frame import MetricFrame
from ..numerics.rng import Rng

PROFILES = ("step", "ramp", "variance")
PROFILE_ALIASES = {
    "cpu-hog": "step",
    "memory-leak": "ramp",
    "network-delay": "variance",
}


def canonical_profile(profile):
    p = PROFILE_ALIASES.get(profile, profile)
    if p not in PROFILES:
        known = ", ".join(PROFILES + tuple(PROFILE_ALIASES))
        raise ContractError(f"unknown fault profile {profile!r} (known: {known})")
    return p


def synthetic_ids(m, per_service=3):
    """Metric ids grouped ``per_service`` to a service: svc00/m00, svc00/m01, ..."""
    return tuple(f"svc{i // per_service:02d}/m{i:02d}" for i in range(m))


@dataclass(frozen=True, eq=False)
class TrueDag:
    """Ground-truth weighted DAG; ``weights[i, j]`` is the effect of i on j."""

    weights: np.ndarray
    order: tuple

    @property
    def binary(self):
        return (self.weights != 0.0).astype(np.int8)

    @property
    def size(self):
        return self.weights.shape[0]

    def descendants(self, node):
        support = self.weights != 0.0
        seen, stack = set(), [node]
        while stack:
            for child in np.flatnonzero(support[stack.pop()]):
                if child not in seen:
                    seen.add(int(child))
                    stack.append(int(child))
        return seen


def generate_random_dag(m, edge_prob, weight_range=(0.5, 2.0), seed=0):
    """Random DAG: shuffled node order, each forward pair joined with
    probability ``edge_prob``, weight magnitudes uniform in ``weight_range``
    with random signs."""
    low, high = weight_range
    if m < 2:
        raise ContractError("need at least 2 nodes")
    if not 0 <= edge_prob <= 1:
        raise ContractError("edge_prob must lie in [0, 1]")
    if not 0 < low < high:
        raise ContractError("weight range must satisfy 0 < low < high")
    rng = Rng(seed).split("dag")
    order = rng.permutation(m)
    # upper-triangular in sampled order
    keep = np.triu(rng.random((m, m)) < edge_prob, k=1)
    mags = rng.uniform(low, high, (m, m))
    signs = np.where(rng.random((m, m)) < 0.5, -1.0, 1.0)
    ordered = np.where(keep, mags * signs, 0.0)
    weights = np.zeros((m, m))
    weights[np.ix_(order, order)] = ordered
    return TrueDag(weights, tuple(int(i) for i in order))


def _propagate(weights, noise):
    """Solve ``X = X W + E`` row-wise (i.e. X = A^T X + Z per sample)."""
    support = weights != 0.0
    out = np.array(noise, dtype=np.float64, copy=True)
    for j in topological_order(support):
        parents = np.flatnonzero(support[:, j])
        if parents.size:
            out[:, j] += out[:, parents] @ weights[parents, j]
    return out


def simulate_sem(dag, n, noise_scale=1.0, seed=0, metric_ids=None, sample_period=5.0):
    """Draw ``n`` samples of the linear SEM with N(0, noise_scale^2) noise.

    The frame is returned raw (not standardized).
    """
    weights = dag.weights if isinstance(dag, TrueDag) else np.asarray(dag, dtype=np.float64)
    if has_cycle(weights != 0.0):
        raise ContractError("simulate_sem needs an acyclic graph")
    m = weights.shape[0]
    rng = Rng(seed).split("sem")
    noise = rng.normal((n, m), scale=noise_scale)
    data = _propagate(weights, noise)
    ids = synthetic_ids(m) if metric_ids is None else metric_ids
    ts = np.arange(n) * float(sample_period)
    return MetricFrame(data, ids, sample_period_seconds=sample_period, timestamps=ts)


@dataclass(frozen=True, eq=False)
class SyntheticCase:
    dag: TrueDag
    frame: MetricFrame
    fault_node: int
    profile: str
    onset_index: int
    magnitude: float

    @property
    def fault_id(self):
        return self.frame.metric_ids[self.fault_node]


def fault_signal(profile, n, onset, magnitude, rng=None):
    """Exogenous disturbance added to the faulty node, zero before ``onset``.

    step: constant ``magnitude``; ramp: linear from 0 up to ``2 * magnitude``
    at the last sample; variance: extra N(0, magnitude^2) noise.
    """
    profile = canonical_profile(profile)
    sig = np.zeros(n)
    k = n - onset
    if k <= 0:
        return sig
    if profile == "step":
        sig[onset:] = magnitude
    elif profile == "ramp":
        sig[onset:] = 2.0 * magnitude * np.arange(1, k + 1) / k
    else:
        if rng is None:
            raise ContractError("variance profile needs a random stream")
        sig[onset:] = rng.normal(k, scale=magnitude)
    return sig


def inject_fault(frame, dag, fault_node, profile, onset_fraction=0.5, magnitude=None,
                 noise_scale=1.0, seed=0):
    """Add a fault at ``fault_node`` from ``onset_fraction * n`` onwards.

    ``magnitude`` defaults to ``3 * noise_scale``. Samples before the onset
    are left bit-identical.
    """
    profile = canonical_profile(profile)
    weights = dag.weights if isinstance(dag, TrueDag) else np.asarray(dag, dtype=np.float64)
    m = weights.shape[0]
    if not 0 <= fault_node < m:
        raise ContractError(f"fault node {fault_node} not in graph of {m} nodes")
    if not 0.0 <= onset_fraction <= 1.0:
        raise ContractError("onset_fraction must lie in [0, 1]")
    n = frame.n_samples
    onset = min(n, int(round(onset_fraction * n)))
    magnitude = 3.0 * noise_scale if magnitude is None else float(magnitude)
    rng = Rng(seed).split("fault")
    delta = np.zeros((n - onset, m))
    delta[:, fault_node] = fault_signal(profile, n, onset, magnitude, rng)[onset:]
    data = np.array(frame.data, copy=True)
    if n - onset:
        data[onset:] += _propagate(weights, delta)
    dag = dag if isinstance(dag, TrueDag) else TrueDag(weights, tuple(topological_order(weights != 0)))
    return SyntheticCase(dag, frame.with_data(data), int(fault_node), profile, onset, magnitude)


def choose_fault_node(dag, rng):
    """Uniform pick among nodes with at least one child (a fault there can
    propagate); falls back to any node for edgeless graphs."""
    has_child = np.flatnonzero((dag.weights != 0.0).any(axis=1))
    pool = has_child if has_child.size else np.arange(dag.size)
    return int(pool[rng.integers(0, pool.size)])


def make_case(m=10, edge_prob=0.3, n=300, profile="step", seed=0, noise_scale=1.0,
              weight_range=(0.5, 2.0), onset_fraction=0.5, magnitude=None, fault_node=None):
    """Random DAG + SEM samples + one injected fault, all from ``seed``."""
    dag = generate_random_dag(m, edge_prob, weight_range, seed=seed)
    frame = simulate_sem(dag, n, noise_scale, seed=seed)
    if fault_node is None:
        fault_node = choose_fault_node(dag, Rng(seed).split("fault-node"))
    return inject_fault(frame, dag, fault_node, profile, onset_fraction, magnitude,
                        noise_scale, seed=seed)

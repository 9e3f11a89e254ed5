"""Root-cause ranking: reverse the learned graph and run PageRank on it.

Reversing every edge makes probability mass flow from effects back to
their causes, so upstream metrics collect the highest scores.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ContractError, NumericError
from .graph import WeightedDag, threshold_graph
from .ingestion.frame import split_metric_id

DEFAULT_ALPHA = 0.85
DEFAULT_TAU = 0.3
PAGERANK_TOL = 1e-10
PAGERANK_MAX_ITER = 10_000
# scores equal to this many decimals count as tied and fall back to label order
TIE_DECIMALS = 12


def prepare_graph(dag):
    """Reverse every edge and drop weight signs: ``|A|^T``."""
    return dag.with_adjacency(np.abs(dag.adjacency).T)


def transition_matrix(dag):
    """Row-normalize non-negative weights; rows without out-edges stay zero."""
    W = dag.adjacency if isinstance(dag, WeightedDag) else np.asarray(dag, dtype=np.float64)
    if np.any(W < 0):
        raise ContractError("negative edge weight; pass the graph through prepare_graph first")
    sums = W.sum(axis=1, keepdims=True)
    return np.divide(W, sums, out=np.zeros_like(W), where=sums > 0)


def _check_transition(P):
    P = np.ascontiguousarray(P, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ContractError(f"transition matrix must be square and non-empty, got {P.shape}")
    if np.any(P < 0) or np.any(P > 1) or not np.all(np.isfinite(P)):
        raise ContractError("transition entries must lie in [0, 1]")
    sums = P.sum(axis=1)
    bad = ~(np.isclose(sums, 1.0, rtol=0, atol=1e-9) | (sums == 0))
    if bad.any():
        raise ContractError(f"row {int(np.flatnonzero(bad)[0])} sums to "
                            f"{sums[bad][0]!r}, not 1 or 0")
    return P


def pagerank(P, alpha=DEFAULT_ALPHA, tol=PAGERANK_TOL, max_iter=PAGERANK_MAX_ITER):
    """Stationary scores of ``v = alpha (P^T v + d/n) + (1 - alpha)/n``.

    ``d`` is the mass sitting on dangling (all-zero) rows, which teleports
    uniformly. Iterates until the L1 change drops below ``tol``.
    """
    if not 0 < alpha < 1:
        raise ContractError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    P = _check_transition(P)
    v, iters, ok = kernels.pagerank_power(P, float(alpha), float(tol), int(max_iter))
    if not ok:
        raise NumericError(f"PageRank did not converge in {iters} iterations")
    return np.asarray(v)


@dataclass(frozen=True)
class RankedCauses:
    """``entries`` is a tuple of ``(metric_id, score)``, best first."""

    entries: tuple

    def labels(self):
        return [label for label, _ in self.entries]

    def scores(self):
        return np.array([s for _, s in self.entries])

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def rank_of(self, label):
        return self.labels().index(label) + 1

    def to_records(self):
        out = []
        for rank, (label, score) in enumerate(self.entries, start=1):
            service, metric = split_metric_id(label)
            out.append({"rank": rank, "metric": label, "service": service, "score": score})
        return out

    def by_service(self):
        """One entry per service: its highest-scoring metric (max aggregation).

        Entries are already sorted, so the first metric seen for a service is
        its best one.
        """
        seen, kept = set(), []
        for label, score in self.entries:
            service = split_metric_id(label)[0]
            if service not in seen:
                seen.add(service)
                kept.append((label, score))
        return RankedCauses(tuple(kept))


def _sorted(items):
    return tuple(sorted(((str(k), float(v)) for k, v in items),
                        key=lambda kv: (-round(kv[1], TIE_DECIMALS), kv[0])))


def rank_causes(dag, alpha=DEFAULT_ALPHA, tau=DEFAULT_TAU):
    """Threshold at ``tau``, reverse, normalize, PageRank, sort by score.

    Equal scores (to ``TIE_DECIMALS`` places) are ordered by label.
    """
    g = prepare_graph(threshold_graph(dag, tau))
    scores = pagerank(transition_matrix(g), alpha)
    return RankedCauses(_sorted(zip(dag.node_labels, scores)))

"""Localization accuracy (AC@k, Avg@k) and structure-recovery scores."""
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError


@dataclass(frozen=True)
class GroundTruth:
    root_causes: frozenset
    adjacency: np.ndarray = None

    def __init__(self, root_causes, adjacency=None):
        rc = frozenset([root_causes] if isinstance(root_causes, str) else root_causes)
        object.__setattr__(self, "root_causes", rc)
        object.__setattr__(self, "adjacency", adjacency)


def _labels(ranked):
    if hasattr(ranked, "labels"):
        return list(ranked.labels())
    return [r if isinstance(r, str) else r[0] for r in ranked]


def _root_set(truth):
    rc = truth.root_causes if isinstance(truth, GroundTruth) else frozenset(truth)
    if not rc:
        raise ContractError("root-cause set must not be empty")
    return rc


def ac_at_k(ranked, truth, k):
    """Hits of the root-cause set among the first ``k`` ranked entries,
    divided by ``min(k, |V_rc|)``."""
    labels = _labels(ranked)
    rc = _root_set(truth)
    if int(k) != k or not 1 <= k <= len(labels):
        raise ContractError(f"k={k} outside 1..{len(labels)}")
    k = int(k)
    hits = sum(1 for label in labels[:k] if label in rc)
    return hits / min(k, len(rc))


def avg_at_k(ranked, truth, k):
    """Mean of AC@1 .. AC@k."""
    labels = _labels(ranked)
    if int(k) != k or not 1 <= k <= len(labels):
        raise ContractError(f"k={k} outside 1..{len(labels)}")
    return sum(ac_at_k(labels, truth, j) for j in range(1, int(k) + 1)) / int(k)


def structural_metrics(learned, truth, tau=0.3):
    """Compare the thresholded learned graph with a binary ground truth.

    Returns ``{"tpr", "fdr", "shd", "tp", "reversed", "extra", "missing"}``.
    A predicted edge counts as a true positive only with the right direction;
    reversed and extra edges are both false discoveries. SHD counts node
    pairs whose edge state differs, so a reversal costs 1.
    """
    W = learned.adjacency if hasattr(learned, "adjacency") else np.asarray(learned, float)
    B = np.asarray(truth.binary if hasattr(truth, "binary") else truth) != 0
    if W.shape != B.shape:
        raise ContractError(f"node counts differ: learned {W.shape} vs truth {B.shape}")
    P = np.abs(W) >= tau
    np.fill_diagonal(P, False)
    n_true = int(B.sum())
    n_pred = int(P.sum())
    tp = int((P & B).sum())
    rev = int((P & B.T & ~B).sum())
    extra = n_pred - tp - rev
    missing = int((B & ~P & ~P.T).sum())
    shd = 0
    m = W.shape[0]
    for i in range(m):
        for j in range(i + 1, m):
            if (P[i, j], P[j, i]) != (B[i, j], B[j, i]):
                shd += 1
    return {
        "tpr": tp / n_true if n_true else 1.0,
        "fdr": (n_pred - tp) / n_pred if n_pred else 0.0,
        "shd": shd,
        "tp": tp,
        "reversed": rev,
        "extra": extra,
        "missing": missing,
    }

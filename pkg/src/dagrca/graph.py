"""Weighted directed graphs over metric ids."""
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DimensionError


@dataclass(frozen=True, eq=False)
class WeightedDag:
    """Dense weighted digraph; ``adjacency[i, j]`` is the weight of ``i -> j``.

    Acyclicity is expected of structure-learning output but not enforced,
    since ranking also accepts arbitrary weighted digraphs.
    """

    adjacency: np.ndarray
    node_labels: tuple

    def __post_init__(self):
        adj = np.array(self.adjacency, dtype=np.float64)
        adj.setflags(write=False)
        labels = tuple(str(x) for x in self.node_labels)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise DimensionError(f"adjacency must be square, got shape {adj.shape}")
        if len(labels) != adj.shape[0]:
            raise DimensionError(f"{len(labels)} labels for {adj.shape[0]} nodes")
        if len(set(labels)) != len(labels):
            raise ContractError("node labels must be unique")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "node_labels", labels)

    @property
    def size(self):
        return len(self.node_labels)

    def edges(self):
        """(source, target, weight) for every nonzero entry, row-major."""
        rows, cols = np.nonzero(self.adjacency)
        return [(self.node_labels[i], self.node_labels[j], float(self.adjacency[i, j]))
                for i, j in zip(rows, cols)]

    def support(self):
        return self.adjacency != 0.0

    def with_adjacency(self, adjacency):
        return WeightedDag(adjacency, self.node_labels)


def threshold_graph(dag, tau):
    """Zero every edge with ``|w| < tau``."""
    if tau < 0:
        raise ContractError(f"threshold must be non-negative, got {tau}")
    adj = dag.adjacency.copy()
    adj[np.abs(adj) < tau] = 0.0
    return dag.with_adjacency(adj)


def has_cycle(support):
    """Iterative three-colour DFS over a boolean adjacency matrix."""
    support = np.asarray(support, dtype=bool)
    n = support.shape[0]
    children = [np.flatnonzero(support[i]) for i in range(n)]
    colour = [0] * n  # 0 new, 1 on stack, 2 done
    for root in range(n):
        if colour[root]:
            continue
        stack = [(root, 0)]
        colour[root] = 1
        while stack:
            node, idx = stack[-1]
            if idx < len(children[node]):
                stack[-1] = (node, idx + 1)
                child = children[node][idx]
                if colour[child] == 1:
                    return True
                if colour[child] == 0:
                    colour[child] = 1
                    stack.append((child, 0))
            else:
                colour[node] = 2
                stack.pop()
    return False


def topological_order(support):
    """Kahn ordering of an acyclic boolean adjacency; raises on cycles."""
    support = np.asarray(support, dtype=bool)
    indeg = support.sum(axis=0).astype(int)
    ready = sorted(np.flatnonzero(indeg == 0).tolist())
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for child in np.flatnonzero(support[node]):
            indeg[child] -= 1
            if indeg[child] == 0:
                ready.append(int(child))
    if len(order) != support.shape[0]:
        raise ContractError("graph has a directed cycle")
    return order

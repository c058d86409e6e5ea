"""Small graph helpers on 0/1 adjacency matrices (``A[i, j] = 1`` means i -> j)."""

import networkx as nx
import numpy as np


def to_digraph(adj, names=None):
    adj = np.asarray(adj)
    g = nx.DiGraph()
    d = adj.shape[0]
    labels = list(names) if names is not None else list(range(d))
    g.add_nodes_from(labels)
    for i, j in zip(*np.nonzero(adj)):
        g.add_edge(labels[i], labels[j], weight=float(adj[i, j]))
    return g


def is_dag(adj):
    """Topological-sort check, independent of the trace-series certificate."""
    adj = np.asarray(adj)
    if np.any(np.diag(adj) != 0):
        return False
    return nx.is_directed_acyclic_graph(to_digraph(adj))


def break_cycles(adj, scores):
    """Greedily drop the lowest-scored edge on some remaining cycle until acyclic."""
    adj = np.array(adj, dtype=np.int64)
    np.fill_diagonal(adj, 0)
    scores = np.asarray(scores, dtype=np.float64)
    while True:
        g = to_digraph(adj)
        try:
            cycle = nx.find_cycle(g)
        except nx.NetworkXNoCycle:
            return adj
        i, j = min(((u, v) for u, v, *_ in cycle), key=lambda e: (scores[e[0], e[1]], e))
        adj[i, j] = 0

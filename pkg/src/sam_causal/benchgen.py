"""Synthetic benchmark graphs and data.

Random DAGs get 0..5 parents per node; each node's value is produced by one
of six mechanism families from its parents and a Gaussian noise term
``N(mu_i, sigma_i)`` with ``mu_i ~ U(-2, 2)``, ``sigma_i ~ U(0, 0.4)``.
Nodes are generated in topological order and every column is standardised.

Also provides the two toy problems used to check structure scoring: the
three linear-Gaussian graphs on the skeleton A - B - C, and the parabola
pair ``Y = 4 (X^2 - 0.5)^2 + E``.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, standardize
from .errors import ContractError, DataError, NotPositiveDefiniteError
from .numeric import Rng, cholesky

MECHANISMS = ("linear", "sigmoid_am", "sigmoid_mix", "gp_am", "gp_mix", "nn")
TOYS = ("vstructure", "parabola")
NN_HIDDEN = 20
SIGMA_FLOOR = 1e-3
MAX_ATTEMPTS = 5


@dataclass
class SyntheticSpec:
    d: int
    n: int = 500
    mechanism: str = "linear"
    seed: int = 0
    max_parents: int = 5
    noise_per_graph: bool = False

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ContractError(f"unknown mechanism {self.mechanism!r}; choose from {MECHANISMS}")
        if self.d < 1 or self.n < 2:
            raise ContractError("need d >= 1 and n >= 2")


@dataclass
class GroundTruth:
    adjacency: np.ndarray
    order: list
    mechanism: str
    params: list = field(default_factory=list)
    noise_mu: np.ndarray | None = None
    noise_sigma: np.ndarray | None = None
    noise: np.ndarray | None = None


def sample_dag(d, max_parents=5, rng=None):
    """Random DAG: random topological order, k ~ U{0..min(max_parents, t)} parents."""
    if d < 1:
        raise ContractError("d must be at least 1")
    rng = rng if rng is not None else Rng(0)
    order = rng.permutation(d)
    adj = np.zeros((d, d), dtype=np.int64)
    for t in range(1, d):
        k = int(rng.integers(0, min(max_parents, t) + 1))
        if k:
            parents = rng.choice(t, size=k, replace=False)
            adj[order[parents], order[t]] = 1
    return adj


def topological_order(adj):
    adj = np.asarray(adj)
    indeg = adj.sum(axis=0).astype(int)
    ready = [i for i in range(adj.shape[0]) if indeg[i] == 0]
    order = []
    while ready:
        i = ready.pop(0)
        order.append(i)
        for j in np.flatnonzero(adj[i]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(int(j))
    if len(order) != adj.shape[0]:
        raise ContractError("graph has a cycle")
    return order


# -- mechanisms ------------------------------------------------------------

def _sigmoid_params(rng):
    b = rng.uniform(0.5, 2.0) * (1.0 if rng.uniform() < 0.5 else -1.0)
    return {"a": float(rng.exponential(0.25) + 1.0), "b": float(b), "c": float(rng.uniform(-2.0, 2.0))}


def sigmoid_fn(x, a, b, c):
    """a * u / (1 + |u|) with u = b (x + c); bounded by a."""
    u = b * (x + c)
    return a * u / (1.0 + np.abs(u))


def rbf_kernel(X, Y=None):
    """Gaussian kernel with unit bandwidth: exp(-|x - y|^2 / 2)."""
    def rows(a):
        a = np.asarray(a, dtype=np.float64)
        return a[:, None] if a.ndim == 1 else a

    X = rows(X)
    Y = X if Y is None else rows(Y)
    sq = (X * X).sum(1)[:, None] + (Y * Y).sum(1)[None, :] - 2.0 * X @ Y.T
    return np.exp(-0.5 * np.maximum(sq, 0.0))


def gp_sample(inputs, z):
    """GP draw (RBF kernel) at ``inputs`` (n, p) from standard-normal ``z`` (n,)."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim == 1:
        inputs = inputs[:, None]
    K = rbf_kernel(inputs)
    K = 0.5 * (K + K.T)
    n = K.shape[0]
    for jitter in (1e-6, 1e-4):
        try:
            L = cholesky(K + jitter * np.eye(n))
            return L @ z
        except NotPositiveDefiniteError:
            continue
    raise NotPositiveDefiniteError("GP kernel not positive definite even with jitter 1e-4")


def draw_mechanism(family, n_parents, n, rng):
    """Draw the parameters of one node's mechanism."""
    if family == "linear":
        return {"coef": rng.normal(size=n_parents)}
    if family == "sigmoid_am":
        return {"f": [_sigmoid_params(rng) for _ in range(n_parents)]}
    if family == "sigmoid_mix":
        return {"f": _sigmoid_params(rng)}
    if family == "gp_am":
        return {"z": rng.normal(size=(n_parents, n))}
    if family == "gp_mix":
        return {"z": rng.normal(size=n)}
    if family == "nn":
        return {
            "W1": rng.normal(size=(n_parents + 1, NN_HIDDEN)),
            "b1": rng.normal(size=NN_HIDDEN),
            "W2": rng.normal(size=NN_HIDDEN),
        }
    raise ContractError(f"unknown mechanism {family!r}")


def mechanism_eval(family, params, parent_values, noise):
    """Evaluate one node: ``parent_values`` is (n, p), ``noise`` is (n,)."""
    P = np.asarray(parent_values, dtype=np.float64)
    e = np.asarray(noise, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    n, p = P.shape
    if family == "linear":
        return P @ params["coef"] + e
    if family == "sigmoid_am":
        out = e.copy()
        for j, f in enumerate(params["f"]):
            out += sigmoid_fn(P[:, j], **f)
        return out
    if family == "sigmoid_mix":
        return sigmoid_fn(P.sum(axis=1) + e, **params["f"])
    if family == "gp_am":
        out = e.copy()
        for j in range(p):
            out += gp_sample(P[:, j], params["z"][j])
        return out
    if family == "gp_mix":
        return gp_sample(np.column_stack([P, e]), params["z"])
    if family == "nn":
        h = np.tanh(np.column_stack([P, e]) @ params["W1"] + params["b1"])
        return h @ params["W2"]
    raise ContractError(f"unknown mechanism {family!r}")


def _draw_noise(d, rng, per_graph):
    if per_graph:
        mu = np.full(d, rng.uniform(-2.0, 2.0))
        sigma = np.full(d, max(rng.uniform(0.0, 0.4), SIGMA_FLOOR))
    else:
        mu = rng.uniform(-2.0, 2.0, d)
        sigma = np.maximum(rng.uniform(0.0, 0.4, d), SIGMA_FLOOR)
    return mu, sigma


def simulate(adj, family, params, noise):
    """Ancestral sampling given fixed mechanism parameters and noise (n, d)."""
    n, d = noise.shape
    X = np.zeros((n, d))
    for j in topological_order(adj):
        parents = np.flatnonzero(adj[:, j])
        col = mechanism_eval(family, params[j], X[:, parents], noise[:, j])
        sd = col.std()
        if not np.isfinite(sd) or sd < 1e-12:
            raise DataError(f"node {j} has zero variance")
        # children see standardised parents, as in the final dataset
        X[:, j] = (col - col.mean()) / sd
    return standardize(X)


def _generate_once(spec, rng):
    adj = sample_dag(spec.d, spec.max_parents, rng)
    mu, sigma = _draw_noise(spec.d, rng, spec.noise_per_graph)
    noise = mu + sigma * rng.normal(size=(spec.n, spec.d))
    params = [draw_mechanism(spec.mechanism, int(adj[:, j].sum()), spec.n, rng) for j in range(spec.d)]
    X = simulate(adj, spec.mechanism, params, noise)
    truth = GroundTruth(adj, topological_order(adj), spec.mechanism, params, mu, sigma, noise)
    return X, truth


def generate_dataset(spec):
    """Sample a graph, its mechanisms and a standardised dataset."""
    rng = Rng(spec.seed)
    last = None
    for _ in range(MAX_ATTEMPTS):
        sub = rng.child()
        try:
            X, truth = _generate_once(spec, sub)
        except (DataError, NotPositiveDefiniteError) as exc:
            last = exc
            continue
        return Dataset(X, [f"X{i + 1}" for i in range(spec.d)]), truth
    raise DataError(f"dataset generation failed after {MAX_ATTEMPTS} attempts: {last}")


# -- toy problems --------------------------------------------------------------

VSTRUCTURE_GRAPHS = {
    # skeleton A - B - C, variables ordered (A, B, C)
    "chain": np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]]),
    "reversed_chain": np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]]),
    "v": np.array([[0, 1, 0], [0, 0, 0], [0, 1, 0]]),
    "reversed_v": np.array([[0, 0, 0], [1, 0, 1], [0, 0, 0]]),
}


def toy_vstructure(n=1000, rng=None, structure="v", coef=1.0, noise_sd=1.0):
    """Linear-Gaussian data on the skeleton A - B - C.

    ``structure`` is one of ``chain`` (A->B->C), ``reversed_chain``
    (C->B->A), ``v`` (A->B<-C).  Returns (standardised Dataset, adjacency).
    """
    if structure not in ("chain", "reversed_chain", "v"):
        raise ContractError(f"unknown structure {structure!r}")
    rng = rng if rng is not None else Rng(0)
    adj = VSTRUCTURE_GRAPHS[structure]
    E = noise_sd * rng.normal(size=(n, 3))
    X = np.zeros((n, 3))
    for j in topological_order(adj):
        parents = np.flatnonzero(adj[:, j])
        X[:, j] = coef * X[:, parents].sum(axis=1) + E[:, j]
    return Dataset(standardize(X), ["A", "B", "C"]), adj.copy()


def toy_parabola(n=1000, rng=None):
    """X ~ U(-1, 1), Y = 4 (X^2 - 0.5)^2 + U(-0.33, 0.33); raw (unstandardised)."""
    rng = rng if rng is not None else Rng(0)
    x = rng.uniform(-1.0, 1.0, n)
    e = rng.uniform(-0.33, 0.33, n)
    y = 4.0 * (x * x - 0.5) ** 2 + e
    return Dataset(np.column_stack([x, y]), ["X", "Y"]), np.array([[0, 1], [0, 0]])

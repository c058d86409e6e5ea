import numpy as np
import pytest

from sam_causal import benchgen
from sam_causal.benchgen import (SyntheticSpec, generate_dataset, gp_sample, mechanism_eval,
                                 rbf_kernel, sample_dag, sigmoid_fn, simulate, toy_parabola,
                                 toy_vstructure)
from sam_causal.errors import ContractError
from sam_causal.graphs import is_dag
from sam_causal.numeric import Rng
from sam_causal.penalties import acyclicity_penalty


@pytest.mark.parametrize("mechanism", benchgen.MECHANISMS)
def test_columns_standardised(mechanism):
    data, truth = generate_dataset(SyntheticSpec(d=8, n=300, mechanism=mechanism, seed=3))
    X = data.values
    assert np.abs(X.mean(axis=0)).max() < 1e-9
    assert np.abs(X.var(axis=0) - 1).max() < 1e-9
    assert acyclicity_penalty(truth.adjacency) == 0 and is_dag(truth.adjacency)


def test_noise_ranges():
    _, truth = generate_dataset(SyntheticSpec(d=30, seed=1))
    assert np.all((truth.noise_mu >= -2) & (truth.noise_mu <= 2))
    assert np.all((truth.noise_sigma > 0) & (truth.noise_sigma <= 0.4))


def test_single_node_graph_is_empty():
    assert sample_dag(1, rng=Rng(0)).sum() == 0


def test_sampled_graphs_acyclic():
    for seed in range(100):
        assert acyclicity_penalty(sample_dag(20, rng=Rng(seed))) == 0


def test_mean_parent_count_of_eligible_nodes():
    counts = []
    for seed in range(1000):
        adj = sample_dag(20, rng=Rng(seed))
        order = Rng(seed).permutation(20)  # the first draw of sample_dag
        counts.extend(adj[:, order[5:]].sum(axis=0))
    assert abs(np.mean(counts) - 2.5) < 0.1


def test_same_seed_same_dataset():
    a, _ = generate_dataset(SyntheticSpec(d=5, n=50, mechanism="gp_mix", seed=9))
    b, _ = generate_dataset(SyntheticSpec(d=5, n=50, mechanism="gp_mix", seed=9))
    assert np.array_equal(a.values, b.values)


def test_linear_root_is_standardised_noise():
    data, truth = generate_dataset(SyntheticSpec(d=6, n=200, seed=2))
    root = int(np.flatnonzero(truth.adjacency.sum(axis=0) == 0)[0])
    e = truth.noise[:, root]
    assert np.allclose(data.values[:, root], (e - e.mean()) / e.std(), atol=1e-12)


def test_simulate_reproduces_dataset():
    data, truth = generate_dataset(SyntheticSpec(d=6, n=100, mechanism="nn", seed=4))
    again = simulate(truth.adjacency, truth.mechanism, truth.params, truth.noise)
    assert np.array_equal(again, data.values)


def test_sigmoid_examples():
    assert sigmoid_fn(0.0, 1.0, 1.0, 0.0) == 0.0
    x = np.linspace(-100, 100, 1001)
    assert np.all(np.abs(sigmoid_fn(x, 1.7, 2.0, 0.3)) < 1.7)


def test_gp_marginal_variance():
    r = Rng(0)
    inputs = np.array([0.3, 0.3 + 1e-9, 2.0])
    draws = np.array([gp_sample(inputs, r.normal(size=3)) for _ in range(1000)])
    assert abs(np.var(draws[:, 0]) - 1) < 0.1
    assert abs(np.cov(draws[:, 0], draws[:, 1])[0, 1] - 1) < 0.1


def test_kernel_psd_after_jitter():
    r = Rng(1)
    for _ in range(100):
        X = r.normal(size=(int(r.integers(2, 30)), int(r.integers(1, 4))))
        K = rbf_kernel(X) + 1e-6 * np.eye(len(X))
        assert np.allclose(K, K.T)
        assert np.linalg.eigvalsh(K).min() > 0


def test_mechanism_unknown():
    with pytest.raises(ContractError):
        SyntheticSpec(d=3, mechanism="cubic")
    with pytest.raises(ContractError):
        mechanism_eval("cubic", {}, np.zeros((3, 1)), np.zeros(3))


def _partial_corr(a, c, b):
    ra = a - np.polyval(np.polyfit(b, a, 1), b)
    rc = c - np.polyval(np.polyfit(b, c, 1), b)
    return np.corrcoef(ra, rc)[0, 1]


def test_vstructure_dependence_pattern():
    data, adj = toy_vstructure(10_000, Rng(0), "v")
    A, B, C = data.values.T
    assert abs(np.corrcoef(A, C)[0, 1]) < 0.03
    assert abs(_partial_corr(A, C, B)) > 0.2
    assert adj[0, 1] == adj[2, 1] == 1


def test_chain_conditional_independence():
    data, _ = toy_vstructure(10_000, Rng(1), "chain")
    A, B, C = data.values.T
    assert abs(_partial_corr(A, C, B)) < 3 / np.sqrt(10_000)


def test_toy_columns_standardised():
    X = toy_vstructure(500, Rng(2), "reversed_chain")[0].values
    assert np.abs(X.mean(axis=0)).max() < 1e-9 and np.abs(X.var(axis=0) - 1).max() < 1e-9


def test_parabola_contracts():
    data, truth = toy_parabola(10_000, Rng(0))
    x, y = data.values.T
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.05
    assert y.min() >= -0.33 and y.max() <= 1.33
    assert abs(x.mean()) < 0.02 and abs(x.var() - 1 / 3) < 0.01
    assert truth.tolist() == [[0, 1], [0, 0]]

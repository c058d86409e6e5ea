import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sam_causal.gates import GateState, gate_backward, open_probability, sample_gates
from sam_causal.numeric import Rng


def test_large_logit_opens_gate():
    s = GateState.init(3)
    s.structural[:] = 20.0
    A = sample_gates(s, Rng(0)).A
    assert np.array_equal(A, 1 - np.eye(3))


def test_diagonal_always_closed():
    s = GateState(np.full((4, 4), 50.0))
    for seed in range(5):
        assert np.all(np.diag(sample_gates(s, Rng(seed)).A) == 0)


def test_zero_logit_opens_half_the_time():
    s = GateState.init(2)
    r = Rng(1)
    opened = [sample_gates(s, r).A[0, 1] for _ in range(10_000)]
    assert abs(np.mean(opened) - 0.5) < 0.02


def test_functional_gates_sampled():
    s = GateState.init(3, n_hidden=5)
    g = sample_gates(s, Rng(0))
    assert g.Z.shape == (5, 3)
    assert set(np.unique(g.Z)) <= {0.0, 1.0}


@pytest.mark.parametrize("s, up, expected", [(0.0, 1.0, 0.25), (0.2, 1.0, 0.2475), (0.7, 0.0, 0.0)])
def test_gate_backward(s, up, expected):
    assert gate_backward(up, s, 0.0) == pytest.approx(expected, abs=1e-4)


def test_open_probability_examples():
    s = GateState(np.array([[5.0, 0.0, 40.0], [-2.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
    p = open_probability(s)
    assert p[0, 1] == 0.5
    assert abs(p[0, 2] - 1.0) < 1e-12
    assert p[1, 0] == pytest.approx(0.1192, abs=1e-4)
    assert np.all(np.diag(p) == 0)


@given(st.floats(-5, 5), st.floats(0.01, 3))
def test_openness_monotone_in_logit(logit, step):
    lo, hi = GateState(np.full((2, 2), logit)), GateState(np.full((2, 2), logit + step))
    r1, r2 = Rng(9), Rng(9)
    a = np.mean([sample_gates(lo, r1).A[0, 1] for _ in range(300)])
    b = np.mean([sample_gates(hi, r2).A[0, 1] for _ in range(300)])
    # same noise stream, so openness can only grow
    assert b >= a

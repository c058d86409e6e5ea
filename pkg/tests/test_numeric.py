import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sam_causal.errors import ContractError, NotPositiveDefiniteError, NumericOverflowError
from sam_causal.numeric import Adam, Rng, Tape, cholesky, forward_and_grad, sigmoid

finite = st.floats(-50, 50, allow_nan=False)


def test_tanh_grad_at_zero():
    _, g = forward_and_grad(lambda t, v: t.sum(t.tanh(v["w"])), {"w": np.zeros(1)})
    assert g["w"] == pytest.approx([1.0])


def test_exp_grad_at_one():
    _, g = forward_and_grad(lambda t, v: t.sum(t.exp(t.sub(v["w"], 1.0))), {"w": np.ones(1)})
    assert g["w"] == pytest.approx([1.0])


def test_overflow_reports_op_index():
    tape = Tape()
    w = tape.param(np.array([1000.0]))
    y = tape.tanh(w)
    with pytest.raises(NumericOverflowError) as info:
        tape.exp(w)
    assert info.value.op_index == 1
    assert y.value[0] == 1.0


def test_non_finite_leaf_rejected():
    with pytest.raises(NumericOverflowError):
        Tape().param(np.array([np.nan]))


def test_exp_clamp_counts_hits_and_blocks_grad():
    tape = Tape()
    w = tape.param(np.array([0.0, 100.0]))
    y = tape.exp(w, clamp=30.0)
    tape.backward(tape.sum(y))
    assert tape.clamp_hits == 1
    assert y.value[1] == pytest.approx(np.exp(30.0))
    assert w.grad[1] == 0.0 and w.grad[0] == 1.0


def test_shared_input_grads_accumulate():
    # x * x must give 2x even though both inputs are the same Var
    _, g = forward_and_grad(lambda t, v: t.sum(t.mul(v["x"], v["x"])), {"x": np.array([3.0, -1.0])})
    assert g["x"] == pytest.approx([6.0, -2.0])


def test_backward_needs_scalar():
    tape = Tape()
    w = tape.param(np.ones(2))
    with pytest.raises(ContractError):
        tape.backward(tape.tanh(w))


@given(arrays(np.float64, st.integers(1, 20), elements=finite))
def test_sigmoid_in_unit_interval_and_symmetric(x):
    s = sigmoid(x)
    assert np.all((s >= 0) & (s <= 1))
    assert np.allclose(s + sigmoid(-x), 1.0)


def test_cholesky_identity():
    assert np.array_equal(cholesky(np.eye(3)), np.eye(3))


def test_cholesky_hand_example():
    L = cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))
    assert np.allclose(L, [[2.0, 0.0], [1.0, np.sqrt(2.0)]], atol=1e-12)
    assert np.abs(L @ L.T - [[4, 2], [2, 3]]).max() < 1e-8


def test_cholesky_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cholesky_asymmetric():
    with pytest.raises(ContractError):
        cholesky(np.array([[1.0, 0.5], [0.0, 1.0]]))


@given(st.integers(1, 8), st.integers(0, 10_000))
def test_cholesky_reconstructs_random_spd(d, seed):
    r = np.random.default_rng(seed)
    M = r.normal(size=(d, d))
    cov = M @ M.T + d * np.eye(d)
    L = cholesky(cov)
    assert np.allclose(L, np.tril(L))
    assert np.abs(L @ L.T - cov).max() < 1e-8


def test_adam_zero_grad_keeps_params():
    p = {"w": np.array([1.0, -2.0])}
    Adam(p).step(p, {"w": np.zeros(2)})
    assert np.array_equal(p["w"], [1.0, -2.0])


def test_adam_first_step_is_lr_sign():
    p = {"w": np.array([0.0])}
    Adam(p, lr=0.01).step(p, {"w": np.array([5.0])})
    assert abs(p["w"][0] + 0.01) < 1e-3


def test_adam_shape_mismatch():
    p = {"w": np.zeros(2)}
    with pytest.raises(ContractError):
        Adam(p).step(p, {"w": np.zeros(3)})


def test_adam_deterministic():
    def run():
        p = {"w": np.ones(3)}
        opt = Adam(p)
        r = Rng(5)
        for _ in range(20):
            opt.step(p, {"w": r.normal(size=3)})
        return p["w"]

    assert np.array_equal(run(), run())


def test_logistic_moments():
    x = Rng(0).logistic(100_000)
    assert abs(x.mean()) < 0.02
    assert abs(x.var() / (np.pi**2 / 3) - 1) < 0.05


def test_rng_streams_reproducible():
    a, b = Rng(7), Rng(7)
    assert np.array_equal(a.normal(size=5), b.normal(size=5))
    assert np.array_equal(a.child().uniform(size=3), b.child().uniform(size=3))


def test_batch_norm_normalises_columns():
    x = Rng(3).normal(2.0, 5.0, size=(50, 4))
    out, mu, var = Tape().batch_norm(x, np.ones(4), np.zeros(4))
    assert np.allclose(out.value.mean(axis=0), 0, atol=1e-12)
    assert np.allclose(out.value.var(axis=0), 1, atol=1e-3)
    assert np.allclose(mu, x.mean(axis=0))


def test_slice_concat_roundtrip_grad():
    def prog(t, v):
        x = v["x"]
        y = t.concat([t.slice(x, 2, 4), t.slice(x, 0, 2)])
        return t.sum(t.mul(y, np.arange(4.0)[:, None]))

    _, g = forward_and_grad(prog, {"x": np.ones((4, 2))})
    assert np.array_equal(g["x"][:, 0], [2.0, 3.0, 0.0, 1.0])

import numpy as np
import pytest

from sam_causal import critic
from sam_causal.numeric import Rng


def test_zero_weights_give_zero_scores():
    p = critic.init_params(3, 8, Rng(0))
    p = {k: np.zeros_like(v) for k, v in p.items()}
    assert np.array_equal(critic.critic_forward(p, Rng(1).normal(size=(10, 3))), np.zeros(10))


def test_duplicate_rows_duplicate_scores():
    p = critic.init_params(2, 8, Rng(0))
    x = Rng(1).normal(size=(5, 2))
    s = critic.critic_forward(p, np.vstack([x, x]))
    assert np.array_equal(s[:5], s[5:])


def test_row_permutation_equivariance():
    p = critic.init_params(3, 8, Rng(0))
    x = Rng(1).normal(size=(30, 3))
    perm = Rng(2).permutation(30)
    assert np.allclose(critic.critic_forward(p, x)[perm], critic.critic_forward(p, x[perm]), atol=1e-12)


def test_fgan_constant_one_is_zero():
    obj, fit = critic.fgan_losses(np.ones(7), np.ones((1, 7)))
    assert obj == pytest.approx(0.0, abs=1e-15)
    assert fit == pytest.approx([-1.0])


def test_fgan_constant_zero():
    obj, _ = critic.fgan_losses(np.zeros(5), np.zeros((1, 5)))
    assert obj == pytest.approx(-np.exp(-1.0))


def test_fgan_clamp_warns():
    with pytest.warns(RuntimeWarning, match="clamped"):
        obj, _ = critic.fgan_losses(np.zeros(2), np.array([[100.0, 0.0]]))
    assert np.isfinite(obj)


def test_mse_examples():
    X = Rng(0).normal(size=(20, 3))
    pseudo = np.repeat(X[None], 3, axis=0)
    assert critic.mse_loss(X, pseudo) == 0.0
    shifted = pseudo.copy()
    shifted[1, :, 1] += 0.5
    assert critic.mse_loss(X, shifted) == pytest.approx(0.25)
    shifted[1, :, 1] += 0.5
    assert critic.mse_loss(X, shifted) == pytest.approx(1.0)


def test_ascent_step_updates_running_stats():
    c = critic.Critic(2, 4, Rng(0))
    before = c.running["mean1"].copy()
    X = Rng(1).normal(size=(16, 2))
    c.ascent_step(X, np.repeat(X[None], 2, axis=0) + 1.0)
    assert not np.array_equal(before, c.running["mean1"])


def test_same_distribution_objective_near_zero():
    """Fakes drawn from the data distribution itself leave nothing to detect."""
    r = Rng(0)
    c = critic.Critic(1, 16, r, lr=0.005)
    vals = []
    for t in range(600):
        real = r.normal(size=(1000, 1))
        fake = r.normal(size=(1, 1000, 1))
        vals.append(c.ascent_step(real, fake))
    assert abs(np.mean(vals[-200:])) < 0.05

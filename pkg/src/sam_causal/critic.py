"""Shared discriminator and the two data-fit losses.

The critic is an MLP ``d -> H -> H -> 1`` with batch normalisation and
LeakyReLU(0.2) on both hidden layers.  It is always run in training mode:
batch statistics come from the rows of the current forward pass (real rows
and all pseudo-sample rows together).

The adversarial fit loss is the f-GAN (KL) variational bound::

    objective = (d/n) sum_l T(x_l) - (1/n) sum_j sum_l exp(T(x~_jl) - 1)

which the critic maximises; generator ``j`` minimises its own term
``-(1/n) sum_l exp(T(x~_jl) - 1)``.
"""

import numpy as np

from .errors import ContractError
from .numeric import EXP_CLAMP, Adam, Tape, warn_clamp

BN_MOMENTUM = 0.1


def init_params(d, n_hidden, rng):
    def layer(fan_in, fan_out):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, (fan_in, fan_out)), rng.uniform(-bound, bound, fan_out)

    # hidden layers carry no bias of their own: batch norm's shift replaces it
    W1, _ = layer(d, n_hidden)
    W2, _ = layer(n_hidden, n_hidden)
    W3, b3 = layer(n_hidden, 1)
    return {
        "W1": W1, "g1": np.ones(n_hidden), "be1": np.zeros(n_hidden),
        "W2": W2, "g2": np.ones(n_hidden), "be2": np.zeros(n_hidden),
        "W3": W3, "b3": b3,
    }


def tape_scores(tape, p, rows, frozen_stats=False):
    """Critic scores ``(m,)`` for a ``(m, d)`` batch; also returns BN batch stats."""
    h = tape.matmul(rows, p["W1"])
    h, mu1, var1 = tape.batch_norm(h, p["g1"], p["be1"], frozen_stats=frozen_stats)
    h = tape.leaky_relu(h)
    h = tape.matmul(h, p["W2"])
    h, mu2, var2 = tape.batch_norm(h, p["g2"], p["be2"], frozen_stats=frozen_stats)
    h = tape.leaky_relu(h)
    out = tape.add(tape.matmul(h, p["W3"]), p["b3"])
    m = out.value.shape[0]
    return tape.reshape(out, (m,)), ((mu1, var1), (mu2, var2))


def tape_fgan(tape, scores_real, scores_fake):
    """Return (critic objective, per-generator fit terms ``(d,)``) as Vars."""
    d, n = scores_fake.value.shape
    real = tape.mul(tape.sum(scores_real), d / n)
    e = tape.exp(tape.sub(scores_fake, 1.0), clamp=EXP_CLAMP - 1.0)
    fit = tape.mul(tape.sum(e, axis=1), -1.0 / n)
    return tape.add(real, tape.sum(fit)), fit


def tape_mse(tape, X, out):
    """(1/n) sum_j sum_l (x_jl - x~_jl)^2 with ``out`` laid out as ``(d, n)``."""
    n = X.shape[0]
    r = tape.sub(X.T, out)
    return tape.mul(tape.sum(tape.mul(r, r)), 1.0 / n)


def critic_forward(params, batch):
    """Scores for a ``(m, d)`` batch (training-mode batch norm)."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[0] == 0:
        raise ContractError("critic_forward needs a non-empty (m, d) batch")
    if batch.shape[1] != params["W1"].shape[0]:
        raise ContractError(f"batch has {batch.shape[1]} columns, critic expects {params['W1'].shape[0]}")
    tape = Tape()
    p = {k: tape.const(v) for k, v in params.items()}
    scores, _ = tape_scores(tape, p, batch)
    return scores.value


def fgan_losses(scores_real, scores_fake):
    """Numeric f-GAN objective and the ``d`` generator fit terms."""
    scores_real = np.asarray(scores_real, dtype=np.float64)
    scores_fake = np.atleast_2d(np.asarray(scores_fake, dtype=np.float64))
    tape = Tape()
    obj, fit = tape_fgan(tape, tape.const(scores_real), tape.const(scores_fake))
    warn_clamp(tape.clamp_hits, "fgan_losses")
    return float(obj.value), fit.value


def mse_loss(data, pseudo):
    """Squared-error fit loss; ``pseudo`` is the ``(d, n, d)`` pseudo-sample batch."""
    X = np.asarray(data, dtype=np.float64)
    pseudo = np.asarray(pseudo, dtype=np.float64)
    n, d = X.shape
    if pseudo.shape != (d, n, d):
        raise ContractError(f"pseudo batch must have shape {(d, n, d)}, got {pseudo.shape}")
    out = np.stack([pseudo[j, :, j] for j in range(d)])
    return float(((X.T - out) ** 2).sum() / n)


def split_scores(tape, scores, n, d):
    """Split stacked scores into real ``(n,)`` and pseudo ``(d, n)`` parts."""
    real = tape.slice(scores, 0, n)
    fake = tape.reshape(tape.slice(scores, n, n + d * n), (d, n))
    return real, fake


def stack_rows(real, fake):
    """Concatenate real rows ``(n, d)`` and pseudo rows ``(d, n, d)``."""
    d, n, _ = fake.shape
    return np.concatenate([real, fake.reshape(d * n, d)], axis=0)


class Critic:
    """Critic parameters, batch-norm running stats and the ascent optimiser."""

    def __init__(self, d, n_hidden, rng, lr=0.01):
        self.params = init_params(d, n_hidden, rng)
        self.running = {
            "mean1": np.zeros(n_hidden), "var1": np.ones(n_hidden),
            "mean2": np.zeros(n_hidden), "var2": np.ones(n_hidden),
        }
        self.opt = Adam(self.params, lr=lr)

    def objective_and_grads(self, real, fake):
        """f-GAN objective with its gradient w.r.t. the critic parameters."""
        d, n, _ = fake.shape
        tape = Tape()
        p = {k: tape.param(v) for k, v in self.params.items()}
        scores, stats = tape_scores(tape, p, stack_rows(real, fake))
        s_real, s_fake = split_scores(tape, scores, n, d)
        obj, _ = tape_fgan(tape, s_real, s_fake)
        tape.backward(obj)
        warn_clamp(tape.clamp_hits, "critic")
        return float(obj.value), {k: v.grad for k, v in p.items()}, stats

    def ascent_step(self, real, fake):
        """One gradient-ascent step; returns the objective before the update."""
        obj, grads, stats = self.objective_and_grads(real, fake)
        self.opt.step(self.params, {k: -g for k, g in grads.items()})
        (mu1, var1), (mu2, var2) = stats
        for key, val in (("mean1", mu1), ("var1", var1), ("mean2", mu2), ("var2", var2)):
            self.running[key] *= 1.0 - BN_MOMENTUM
            self.running[key] += BN_MOMENTUM * val
        return obj


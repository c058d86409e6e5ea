"""Analytic gradients against central finite differences (h = 1e-5)."""

import numpy as np
import pytest

from conftest import central_diff, rel_err
from sam_causal import critic, generators
from sam_causal.numeric import Rng, Tape, forward_and_grad, sigmoid
from sam_causal.penalties import PenaltyWeights, tape_acyclicity, tape_sparsity

TOL = 1e-4
CONFIGS = range(10)


def _check(program, params, consts=None):
    _, grads = forward_and_grad(program, params, consts)
    for name, value in params.items():
        def f(x, name=name):
            p = dict(params, **{name: x})
            return forward_and_grad(program, p, consts)[0]
        fd = central_diff(f, value)
        assert rel_err(grads[name], fd) < TOL, name


def _gen_problem(seed, linear):
    rng = Rng(seed)
    n, d, nh = 12, 3, 4
    X = rng.normal(size=(n, d))
    E = rng.normal(size=(n, d))
    A = (rng.uniform(size=(d, d)) > 0.4).astype(float)
    np.fill_diagonal(A, 0)
    Z = (rng.uniform(size=(nh, d)) > 0.3).astype(float)
    gen = generators.init_params(d, nh, rng, linear=linear)
    crit = critic.init_params(d, 5, rng)
    return X, E, A, Z, gen, crit


@pytest.mark.parametrize("linear", [False, True])
@pytest.mark.parametrize("seed", CONFIGS)
def test_generator_fit_term(seed, linear):
    X, E, A, Z, gen, crit = _gen_problem(seed, linear)
    n, d = X.shape

    def program(t, v):
        p = {k: v[k] for k in gen}
        out = generators.tape_outputs(t, p, X, A, Z, E)
        fake = generators.tape_pseudo_batch(t, X, out)
        rows = t.concat([X, t.reshape(fake, (d * n, d))])
        cp = {k: t.const(w) for k, w in crit.items()}
        scores, _ = critic.tape_scores(t, cp, rows)
        real, fk = critic.split_scores(t, scores, n, d)
        _, fit = critic.tape_fgan(t, real, fk)
        return t.sum(fit)

    _check(program, gen)


@pytest.mark.parametrize("seed", CONFIGS)
def test_critic_objective(seed):
    X, E, A, Z, gen, crit = _gen_problem(seed, False)
    n, d = X.shape
    fake = generators.generate(gen, X, (A, Z), E)
    rows = critic.stack_rows(X, fake)

    def program(t, v):
        scores, _ = critic.tape_scores(t, v, rows)
        real, fk = critic.split_scores(t, scores, n, d)
        return critic.tape_fgan(t, real, fk)[0]

    _check(program, crit)


@pytest.mark.parametrize("seed", CONFIGS)
def test_mse_fit_term(seed):
    X, E, A, Z, gen, _ = _gen_problem(seed, False)

    def program(t, v):
        return critic.tape_mse(t, X, generators.tape_outputs(t, v, X, A, Z, E))

    _check(program, gen)


@pytest.mark.parametrize("seed", CONFIGS)
def test_sparsity_through_straight_through_gates(seed):
    """The straight-through gradient is the gradient of the sigmoid relaxation."""
    rng = Rng(seed)
    d, nh, n = 4, 3, 50
    a = rng.normal(size=(d, d))
    z = rng.normal(size=(nh, d))
    la, lz = rng.logistic((d, d)), rng.logistic((nh, d))
    mask = 1.0 - np.eye(d)
    w = PenaltyWeights(5.0, 0.005, 1.0, n)

    t = Tape()
    av, zv = t.param(a), t.param(z)
    A = t.straight_through_gate(av, la, mask=mask)
    Z = t.straight_through_gate(zv, lz)
    t.backward(tape_sparsity(t, A, Z, w))

    def relaxed_a(x):
        return w.lambda_s / n * float(np.sum(sigmoid(la + x) * mask))

    def relaxed_z(x):
        return w.lambda_f / n * float(np.sum(sigmoid(lz + x)))

    assert rel_err(av.grad, central_diff(relaxed_a, a)) < TOL
    assert rel_err(zv.grad, central_diff(relaxed_z, z)) < TOL
    assert np.all(np.diag(av.grad) == 0)


@pytest.mark.parametrize("seed", CONFIGS)
def test_acyclicity_penalty(seed):
    rng = Rng(seed)
    d = int(rng.integers(2, 8))
    A = rng.uniform(size=(d, d))

    def program(t, v):
        return tape_acyclicity(t, v["A"], 1.0)

    _check(program, {"A": A})


@pytest.mark.parametrize("seed", CONFIGS[:3])
def test_batch_norm_composite(seed):
    rng = Rng(seed)
    x = rng.normal(size=(9, 4))
    params = {"x": x, "g": rng.normal(size=4), "b": rng.normal(size=4)}
    wts = rng.normal(size=(9, 4))

    def program(t, v):
        out, _, _ = t.batch_norm(v["x"], v["g"], v["b"])
        return t.sum(t.mul(t.leaky_relu(out), wts))

    _check(program, params)

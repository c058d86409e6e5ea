"""Conditional generators: one small network per variable.

Generator ``j`` maps the gated observed variables and its own Gaussian noise
to a replacement value for column ``j``::

    x~_j = sum_k m[j,k] Z[k,j] tanh(sum_i W[j,i,k] A[i,j] x_i + b[j,k] + w_noise[j,k] e_j) + m0[j]

The linear mechanism drops the hidden layer and the functional gates::

    x~_j = sum_i W[i,j] A[i,j] x_i + w_noise[j] e_j + b[j]

All ``d`` generators are evaluated together as batched matmuls.  Outputs are
laid out as ``(d, n)`` (generator first).
"""

import numpy as np

from .errors import ContractError, NumericOverflowError
from .numeric import Tape


def init_params(d, n_hidden, rng, linear=False):
    """Scaled-uniform initialisation, bound 1/sqrt(fan_in)."""
    if linear:
        bound = 1.0 / np.sqrt(d + 1)
        W = rng.uniform(-bound, bound, (d, d))
        np.fill_diagonal(W, 0.0)
        return {
            "W": W,
            "w_noise": rng.uniform(-bound, bound, d),
            "b": rng.uniform(-bound, bound, d),
        }
    b_in = 1.0 / np.sqrt(d + 1)
    b_out = 1.0 / np.sqrt(n_hidden)
    return {
        "W": rng.uniform(-b_in, b_in, (d, d, n_hidden)),
        "w_noise": rng.uniform(-b_in, b_in, (d, n_hidden)),
        "b": rng.uniform(-b_in, b_in, (d, n_hidden)),
        "m": rng.uniform(-b_out, b_out, (d, n_hidden)),
        "m0": rng.uniform(-b_out, b_out, d),
    }


def is_linear(params):
    return params["W"].ndim == 2


def n_hidden(params):
    return None if is_linear(params) else params["W"].shape[2]


def check_params(params, d):
    W = params["W"]
    if is_linear(params):
        if W.shape != (d, d) or params["w_noise"].shape != (d,) or params["b"].shape != (d,):
            raise ContractError("linear generator parameters do not match d")
        return
    nh = W.shape[2]
    expected = {"W": (d, d, nh), "w_noise": (d, nh), "b": (d, nh), "m": (d, nh), "m0": (d,)}
    for k, shape in expected.items():
        if params[k].shape != shape:
            raise ContractError(f"generator parameter {k!r} has shape {params[k].shape}, expected {shape}")


def tape_outputs(tape, p, X, A, Z, E):
    """Generator outputs ``(d, n)`` on ``tape``.

    ``p`` maps parameter names to Vars, ``X`` and ``E`` are ``(n, d)`` arrays,
    ``A`` is a ``(d, d)`` Var/array and ``Z`` an ``(n_h, d)`` Var/array (ignored
    by the linear mechanism).
    """
    n, d = X.shape
    if p["W"].value.ndim == 2:
        WA = tape.mul(p["W"], A)
        lin = tape.add(tape.matmul(X, WA), tape.mul(tape.const(E), tape.reshape(p["w_noise"], (1, d))))
        lin = tape.add(lin, tape.reshape(p["b"], (1, d)))
        return tape.transpose(lin)
    nh = p["W"].value.shape[2]
    gate_in = tape.reshape(tape.transpose(A), (d, 1, d))
    XA = tape.mul(X.reshape(1, n, d), gate_in)
    pre = tape.matmul(XA, p["W"])
    noise = tape.mul(E.T.reshape(d, n, 1), tape.reshape(p["w_noise"], (d, 1, nh)))
    pre = tape.add(tape.add(pre, noise), tape.reshape(p["b"], (d, 1, nh)))
    h = tape.tanh(pre)
    mz = tape.reshape(tape.mul(p["m"], tape.transpose(Z)), (d, nh, 1))
    out = tape.reshape(tape.matmul(h, mz), (d, n))
    return tape.add(out, tape.reshape(p["m0"], (d, 1)))


def tape_pseudo_batch(tape, X, out):
    """Stack the ``d`` pseudo-sample sets: ``(d, n, d)`` with column j swapped."""
    n, d = X.shape
    eye = np.eye(d)
    base = X[None, :, :] * (1.0 - eye)[:, None, :]
    swapped = tape.mul(tape.reshape(out, (d, n, 1)), eye[:, None, :])
    return tape.add(base, swapped)


def _eval(params, data, A, Z, noise):
    X = np.asarray(data, dtype=np.float64)
    n, d = X.shape
    check_params(params, d)
    if noise.shape != (n, d):
        raise ContractError(f"noise must have shape {(n, d)}, got {noise.shape}")
    tape = Tape(check_finite=False)
    p = {k: tape.const(v) for k, v in params.items()}
    Zv = None if Z is None else np.asarray(Z, dtype=np.float64)
    out = tape_outputs(tape, p, X, np.asarray(A, dtype=np.float64), Zv, noise).value
    bad = ~np.isfinite(out).all(axis=1)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        raise NumericOverflowError(f"generator {j} produced non-finite output", where=f"generator {j}")
    return out


def generator_outputs(params, data, gates, noise):
    """Numeric forward pass, ``(d, n)``; ``gates`` is ``(A, Z)``."""
    A, Z = gates
    return _eval(params, data, A, Z, noise)


def generate(params, data, gates, noise):
    """Pseudo-sample batch ``(d, n, d)``: entry ``j`` is ``data`` with column j generated."""
    if is_linear(params):
        raise ContractError("linear parameters given to the non-linear generator; use generate_linear")
    out = generator_outputs(params, data, gates, noise)
    return pseudo_batch(data, out)


def generate_linear(params, data, gates, noise):
    """Linear-mechanism pseudo-sample batch; ``gates`` may be ``A`` or ``(A, None)``."""
    if not is_linear(params):
        raise ContractError("non-linear parameters given to generate_linear")
    A = gates[0] if isinstance(gates, tuple) else gates
    out = _eval(params, data, A, None, noise)
    return pseudo_batch(data, out)


def pseudo_batch(data, out):
    X = np.asarray(data, dtype=np.float64)
    d = X.shape[1]
    batch = np.repeat(X[None, :, :], d, axis=0)
    for j in range(d):
        batch[j, :, j] = out[j]
    return batch

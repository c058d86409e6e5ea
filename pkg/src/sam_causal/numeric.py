"""Dense numerics: a small reverse-mode tape, Cholesky, Adam and a seeded RNG.

The tape supports the fixed set of primitives the generators, critic and
penalties are built from.  Every op checks its forward value for NaN/Inf and
raises :class:`NumericOverflowError` with the op index on failure.

Example
-------
>>> tape = Tape()
>>> w = tape.param(np.zeros(3))
>>> loss = tape.sum(tape.tanh(w))
>>> tape.backward(loss)
>>> w.grad
array([1., 1., 1.])
"""

import functools
import warnings

import numpy as np

from .errors import ContractError, NotPositiveDefiniteError, NumericOverflowError

LEAKY_SLOPE = 0.2
EXP_CLAMP = 30.0


class Var:
    """A node on the tape: a float64 array plus its accumulated gradient."""

    __slots__ = ("value", "grad", "requires_grad")

    def __init__(self, value, requires_grad=False):
        self.value = value
        self.grad = None
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(shape={self.value.shape}, requires_grad={self.requires_grad})"


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _sigmoid(x):
    # split evaluation avoids exp overflow on large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        return float(_sigmoid(x.reshape(1))[0])
    return _sigmoid(x)


_FP_RAISE = {"over": "raise", "invalid": "raise", "divide": "raise"}


def _op(fn):
    """Evaluate a tape op with FP traps on; overflow/NaN becomes NumericOverflowError."""

    @functools.wraps(fn)
    def wrapper(self, *args, **kwargs):
        if not self.check_finite:
            return fn(self, *args, **kwargs)
        try:
            with np.errstate(**_FP_RAISE):
                return fn(self, *args, **kwargs)
        except FloatingPointError as exc:
            idx = self.n_ops
            raise NumericOverflowError(
                f"non-finite value in op #{idx} ({fn.__name__}): {exc}", op_index=idx, where=fn.__name__
            ) from None

    return wrapper


class Tape:
    """Records primitive operations for a single reverse sweep.

    Build a fresh tape for every forward pass.  Ops whose inputs carry no
    gradient are evaluated but not recorded.
    """

    def __init__(self, check_finite=True):
        self.check_finite = check_finite
        self.ops = []
        self.n_ops = 0
        self.clamp_hits = 0

    # -- leaves ---------------------------------------------------------
    def param(self, value):
        return Var(self._leaf(np.array(value, dtype=np.float64)), requires_grad=True)

    def const(self, value):
        if isinstance(value, Var):
            return value
        return Var(self._leaf(np.asarray(value, dtype=np.float64)), requires_grad=False)

    def _leaf(self, value):
        if self.check_finite and not np.all(np.isfinite(value)):
            idx = self.n_ops
            raise NumericOverflowError(f"non-finite input at op #{idx}", op_index=idx, where="leaf")
        return value

    def _lift(self, x):
        return x if isinstance(x, Var) else self.const(x)

    def _record(self, name, value, inputs, backward):
        idx = self.n_ops
        self.n_ops += 1
        out = Var(value, requires_grad=any(v.requires_grad for v in inputs))
        if out.requires_grad:
            self.ops.append((idx, name, out, inputs, backward))
        return out

    # -- arithmetic -----------------------------------------------------
    @_op
    def add(self, a, b):
        a, b = self._lift(a), self._lift(b)
        return self._record("add", a.value + b.value, (a, b), lambda g: (g, g))

    @_op
    def sub(self, a, b):
        a, b = self._lift(a), self._lift(b)
        return self._record("sub", a.value - b.value, (a, b), lambda g: (g, -g))

    @_op
    def mul(self, a, b):
        if np.isscalar(b):
            a = self._lift(a)
            c = float(b)
            return self._record("scale", a.value * c, (a,), lambda g: (g * c,))
        a, b = self._lift(a), self._lift(b)
        av, bv = a.value, b.value
        return self._record("mul", av * bv, (a, b), lambda g: (g * bv, g * av))

    @_op
    def matmul(self, a, b):
        a, b = self._lift(a), self._lift(b)
        av, bv = a.value, b.value

        def back(g):
            ga = g @ np.swapaxes(bv, -1, -2) if a.requires_grad else None
            gb = np.swapaxes(av, -1, -2) @ g if b.requires_grad else None
            return ga, gb

        return self._record("matmul", av @ bv, (a, b), back)

    # -- elementwise nonlinearities ---------------------------------------
    @_op
    def tanh(self, x):
        x = self._lift(x)
        y = np.tanh(x.value)
        return self._record("tanh", y, (x,), lambda g: (g * (1.0 - y * y),))

    @_op
    def sigmoid(self, x):
        x = self._lift(x)
        y = _sigmoid(x.value)
        return self._record("sigmoid", y, (x,), lambda g: (g * y * (1.0 - y),))

    @_op
    def leaky_relu(self, x, slope=LEAKY_SLOPE):
        x = self._lift(x)
        # multiplicative form; np.where is slow on unpredictable masks
        factor = (x.value > 0) * (1.0 - slope) + slope
        return self._record("leaky_relu", x.value * factor, (x,), lambda g: (g * factor,))

    @_op
    def exp(self, x, clamp=None):
        """exp(x); with ``clamp`` set, arguments above it are cut (zero grad there)."""
        x = self._lift(x)
        xv = x.value
        if clamp is not None:
            over = xv > clamp
            if over.any():
                self.clamp_hits += int(over.sum())
                xv = np.where(over, clamp, xv)
            y = np.exp(xv)
            return self._record("exp", y, (x,), lambda g: (np.where(over, 0.0, g * y),))
        y = np.exp(xv)
        return self._record("exp", y, (x,), lambda g: (g * y,))

    @_op
    def batch_norm(self, x, gamma, beta, eps=1e-5, frozen_stats=False):
        """Training-mode batch normalisation over axis 0 of a 2-D input.

        Returns the output Var and the batch mean/variance used.  With
        ``frozen_stats`` the batch mean/variance are used in the forward pass
        but treated as constants by the backward pass.
        """
        x, gamma, beta = self._lift(x), self._lift(gamma), self._lift(beta)
        m = x.value.shape[0]
        mu = x.value.mean(axis=0)
        xhat = x.value - mu
        var = np.einsum("ij,ij->j", xhat, xhat) / m
        inv = 1.0 / np.sqrt(var + eps)
        xhat *= inv
        gv = gamma.value

        def back(g):
            g_sum = g.sum(axis=0)
            g_xhat = np.einsum("ij,ij->j", g, xhat)
            gx = None
            if x.requires_grad and frozen_stats:
                gx = g * (gv * inv)
            elif x.requires_grad:
                # d/dx of gamma * xhat + beta, batch statistics included
                gx = g - g_sum / m
                gx -= xhat * (g_xhat / m)
                gx *= gv * inv
            return gx, g_xhat, g_sum

        out = self._record("batch_norm", xhat * gv + beta.value, (x, gamma, beta), back)
        return out, mu, var

    # -- reductions -----------------------------------------------------
    @_op
    def sum(self, x, axis=None):
        x = self._lift(x)
        shape = x.value.shape

        def back(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape),)

        return self._record("sum", np.asarray(x.value.sum(axis=axis)), (x,), back)

    @_op
    def mean(self, x, axis=None):
        x = self._lift(x)
        shape = x.value.shape
        count = x.value.size if axis is None else np.prod([shape[a] for a in np.atleast_1d(axis)])

        def back(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g / count, shape),)

        return self._record("mean", np.asarray(x.value.mean(axis=axis)), (x,), back)

    # -- structure ------------------------------------------------------
    @_op
    def trace_power_series(self, a):
        """sum_{k=1..d} tr(A^k)/k! via the scaled recurrence B_k = B_{k-1} A / k."""
        a = self._lift(a)
        value, grad = trace_series_and_grad(a.value)
        return self._record("trace_power_series", np.asarray(value), (a,), lambda g: (g * grad,))

    @_op
    def straight_through_gate(self, logits, noise, mask=None):
        """Hard H(noise + logits) forward, sigmoid'(noise + logits) backward."""
        logits = self._lift(logits)
        s = noise + logits.value
        hard = (s > 0).astype(np.float64)
        p = _sigmoid(s)
        slope = p * (1.0 - p)
        if mask is not None:
            hard = hard * mask
            slope = slope * mask
        return self._record("straight_through_gate", hard, (logits,), lambda g: (g * slope,))

    # -- shape plumbing -------------------------------------------------
    @_op
    def reshape(self, x, shape):
        x = self._lift(x)
        old = x.value.shape
        return self._record("reshape", x.value.reshape(shape), (x,), lambda g: (g.reshape(old),))

    @_op
    def transpose(self, x, axes=None):
        x = self._lift(x)
        inv = None if axes is None else np.argsort(axes)
        return self._record("transpose", np.transpose(x.value, axes), (x,),
                            lambda g: (np.transpose(g, inv),))

    @_op
    def slice(self, x, start, stop):
        """Rows ``start:stop`` along axis 0."""
        x = self._lift(x)
        shape = x.value.shape

        def back(g):
            out = np.zeros(shape)
            out[start:stop] = g
            return (out,)

        return self._record("slice", x.value[start:stop], (x,), back)

    @_op
    def concat(self, xs, axis=0):
        xs = [self._lift(x) for x in xs]
        sizes = np.cumsum([x.value.shape[axis] for x in xs])[:-1]
        return self._record("concat", np.concatenate([x.value for x in xs], axis=axis), tuple(xs),
                            lambda g: tuple(np.split(g, sizes, axis=axis)))

    # -- reverse sweep --------------------------------------------------
    def backward(self, loss, seed=None):
        """Accumulate d(loss)/d(param) into ``.grad`` of every param leaf."""
        if seed is None:
            if loss.value.size != 1:
                raise ContractError("backward() without seed needs a scalar loss")
            seed = np.ones_like(loss.value)
        loss.grad = np.asarray(seed, dtype=np.float64)
        idx = name = None
        try:
            with np.errstate(**(_FP_RAISE if self.check_finite else {"all": "ignore"})):
                for idx, name, out, inputs, back in reversed(self.ops):
                    if out.grad is None:
                        continue
                    grads = back(out.grad)
                    for v, g in zip(inputs, grads):
                        if g is None or not v.requires_grad:
                            continue
                        g = _unbroadcast(np.asarray(g), v.value.shape)
                        # never mutate grads in place: arrays may be shared between inputs
                        v.grad = g if v.grad is None else v.grad + g
                    if out is not loss:
                        out.grad = None
        except FloatingPointError as exc:
            raise NumericOverflowError(
                f"non-finite gradient in op #{idx} ({name}): {exc}", op_index=idx, where=name
            ) from None


def trace_series_and_grad(a):
    """Return (sum_k tr(A^k)/k!, d/dA) for k = 1..d without factorials.

    The gradient is sum_{k=1..d} (A^{k-1})^T / (k-1)!.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"square matrix required, got shape {a.shape}")
    d = a.shape[0]
    b = np.eye(d)
    grad = np.zeros_like(a)
    value = 0.0
    for k in range(1, d + 1):
        grad += b.T
        b = b @ a / k
        value += np.trace(b)
    return float(value), grad


def forward_and_grad(program, params, consts=None, check_finite=True):
    """Run ``program(tape, vars)`` and return ``(outputs, grads)``.

    ``params`` maps names to arrays that receive gradients, ``consts`` to
    arrays that do not.  ``program`` returns either a scalar Var (the loss) or
    a dict of Vars whose ``"loss"`` entry is differentiated.
    """
    tape = Tape(check_finite=check_finite)
    leaves = {k: tape.param(v) for k, v in params.items()}
    for k, v in (consts or {}).items():
        leaves[k] = tape.const(v)
    out = program(tape, leaves)
    loss = out["loss"] if isinstance(out, dict) else out
    tape.backward(loss)
    grads = {
        k: (leaves[k].grad if leaves[k].grad is not None else np.zeros_like(leaves[k].value))
        for k in params
    }
    if isinstance(out, dict):
        values = {k: (float(v.value) if v.value.size == 1 else v.value) for k, v in out.items()}
    else:
        values = float(loss.value)
    return values, grads


def cholesky(cov):
    """Lower-triangular L with L @ L.T == cov.

    Callers add jitter themselves for near-singular inputs.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ContractError(f"square matrix required, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-10 * max(1.0, np.abs(cov).max(initial=0.0))):
        raise ContractError("covariance matrix is not symmetric")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from None


class Adam:
    """Adam with bias correction over a dict of named arrays (updated in place)."""

    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        for k, g in grads.items():
            if k not in self.m:
                raise ContractError(f"unknown parameter {k!r}")
            if g.shape != params[k].shape:
                raise ContractError(
                    f"gradient shape {g.shape} does not match parameter {k!r} shape {params[k].shape}"
                )
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            params[k] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
        return params

    def state_dict(self):
        return {"t": self.t, "m": {k: v.copy() for k, v in self.m.items()},
                "v": {k: v.copy() for k, v in self.v.items()}}


class Rng:
    """Seeded random stream (PCG64) with the draws the package needs."""

    def __init__(self, seed):
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    @property
    def generator(self):
        return self._gen

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def open_uniform(self, size=None):
        """Uniform draws strictly inside (0, 1)."""
        u = self._gen.random(size)
        tiny = np.finfo(np.float64).tiny
        return np.clip(u, tiny, 1.0 - np.finfo(np.float64).epsneg)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def logistic(self, size=None):
        u = self.open_uniform(size)
        return np.log(u) - np.log1p(-u)

    def exponential(self, scale=1.0, size=None):
        return self._gen.exponential(scale, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def choice(self, a, size=None, replace=True):
        return self._gen.choice(a, size=size, replace=replace)

    def child(self):
        """Independent sub-stream derived from this one."""
        return Rng(int(self._gen.integers(0, 2**63 - 1)))


def warn_clamp(hits, where):
    if hits:
        warnings.warn(f"{where}: {hits} critic scores clamped at {EXP_CLAMP} before exp",
                      RuntimeWarning, stacklevel=2)

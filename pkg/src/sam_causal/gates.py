"""Binary structural and functional gates with straight-through gradients.

Each epoch a gate is opened with ``H(l + logit)`` where ``l`` is a fresh
logistic draw; the backward pass uses the slope of ``sigmoid(l + logit)``.
Structural gate ``A[i, j]`` lets variable ``i`` feed the generator of ``j``;
functional gate ``Z[h, j]`` switches hidden unit ``h`` of generator ``j``.
"""

from dataclasses import dataclass

import numpy as np

from .numeric import _sigmoid


@dataclass
class GateState:
    structural: np.ndarray  # (d, d) logits
    functional: np.ndarray | None = None  # (n_h, d) logits, None for linear mechanisms

    @classmethod
    def init(cls, d, n_hidden=None):
        """Zero logits: every gate starts open with probability exactly 1/2."""
        func = None if n_hidden is None else np.zeros((n_hidden, d))
        return cls(np.zeros((d, d)), func)

    @property
    def d(self):
        return self.structural.shape[0]

    @property
    def offdiag_mask(self):
        return 1.0 - np.eye(self.d)


@dataclass
class GateSample:
    A: np.ndarray
    Z: np.ndarray | None
    noise_structural: np.ndarray
    noise_functional: np.ndarray | None


def sample_gates(state, rng):
    """Draw one hard value per gate for this epoch (noise shared across samples)."""
    d = state.d
    la = rng.logistic((d, d))
    A = (la + state.structural > 0).astype(np.float64)
    np.fill_diagonal(A, 0.0)
    Z = lz = None
    if state.functional is not None:
        lz = rng.logistic(state.functional.shape)
        Z = (lz + state.functional > 0).astype(np.float64)
    return GateSample(A, Z, la, lz)


def gate_backward(upstream, noise, logit):
    """Straight-through gradient: upstream * sigmoid'(noise + logit)."""
    s = np.asarray(noise, dtype=np.float64) + np.asarray(logit, dtype=np.float64)
    p = _sigmoid(np.atleast_1d(s)).reshape(s.shape)
    return np.asarray(upstream) * p * (1.0 - p)


def open_probability(state):
    """sigmoid of the structural logits with a zero diagonal."""
    p = _sigmoid(np.asarray(state.structural, dtype=np.float64))
    np.fill_diagonal(p, 0.0)
    return p

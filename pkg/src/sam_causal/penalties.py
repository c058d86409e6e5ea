"""Complexity penalties: weighted gate counts and the acyclicity series."""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .numeric import trace_series_and_grad


@dataclass(frozen=True)
class PenaltyWeights:
    lambda_s: float = 5.0
    lambda_f: float = 0.005
    lambda_d: float = 1.0
    n: int = 1

    def __post_init__(self):
        if min(self.lambda_s, self.lambda_f, self.lambda_d) < 0:
            raise ContractError("penalty weights must be non-negative")
        if self.n < 1:
            raise ContractError("sample count n must be positive")


def sparsity_penalty(A, Z, weights):
    """(lambda_s/n) * sum(A) + (lambda_f/n) * sum(Z); ``Z`` may be None."""
    value = weights.lambda_s / weights.n * float(np.sum(A))
    if Z is not None:
        value += weights.lambda_f / weights.n * float(np.sum(Z))
    return value


def acyclicity_penalty(A):
    """sum_{k=1..d} tr(A^k)/k!; zero iff the binary graph ``A`` has no cycle."""
    return trace_series_and_grad(A)[0]


def acyclicity_grad(A):
    """Gradient of :func:`acyclicity_penalty`: sum_k (A^{k-1})^T / (k-1)!."""
    return trace_series_and_grad(A)[1]


def tape_sparsity(tape, A, Z, weights):
    """Sparsity penalty on a tape; gradients flow through straight-through gates."""
    out = tape.mul(tape.sum(A), weights.lambda_s / weights.n)
    if Z is not None:
        out = tape.add(out, tape.mul(tape.sum(Z), weights.lambda_f / weights.n))
    return out


def tape_acyclicity(tape, A, lambda_d):
    return tape.mul(tape.trace_power_series(A), float(lambda_d))

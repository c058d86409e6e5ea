"""Scoring predicted graphs against a ground-truth DAG.

Candidates are all ordered pairs ``i != j``.  A predicted edge counts as a
true positive only with the right orientation; reversed edges and edges
outside the true skeleton are false positives.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass
class PrCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray

    def __len__(self):
        return len(self.thresholds)

    def rows(self):
        return list(zip(self.thresholds.tolist(), self.precision.tolist(), self.recall.tolist()))


def _offdiag(m):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ContractError(f"square matrix required, got shape {m.shape}")
    mask = ~np.eye(m.shape[0], dtype=bool)
    return m[mask]


def _check_truth(truth):
    t = np.asarray(truth)
    if np.any((t != 0) & (t.T != 0) & ~np.eye(t.shape[0], dtype=bool)):
        raise ContractError("ground truth contains a 2-cycle")


def pr_curve(scores, truth):
    """Precision/recall at every distinct score threshold (highest first).

    An edge is predicted when its score is >= the threshold.  As in common
    average-precision tooling, thresholds stop once full recall is reached.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.shape != truth.shape:
        raise ContractError(f"score shape {scores.shape} != truth shape {truth.shape}")
    _check_truth(truth)
    s = _offdiag(scores)
    y = _offdiag(truth) != 0
    n_pos = int(y.sum())
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of each run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    precision = tp / (tp + fp)
    recall = tp / n_pos if n_pos else np.zeros_like(tp, dtype=np.float64)
    if n_pos:
        stop = int(np.searchsorted(tp, tp[-1])) + 1
        ends, precision, recall = ends[:stop], precision[:stop], recall[:stop]
    return PrCurve(s[ends], precision.astype(np.float64), recall.astype(np.float64))


def aupr(curve):
    """Average precision: sum_k (R_k - R_{k-1}) P_k with R_0 = 0."""
    if len(curve) == 0:
        raise ContractError("empty precision-recall curve")
    r = np.r_[0.0, curve.recall]
    return float(np.sum(np.diff(r) * curve.precision))


def shd(pred, truth):
    """Structural Hamming distance; a reversed edge is one mistake.

    Counts unordered pairs {i, j} whose edge status (none, i->j, j->i, both)
    differs between the two graphs.
    """
    pred = np.asarray(pred) != 0
    truth = np.asarray(truth) != 0
    if pred.shape != truth.shape:
        raise ContractError(f"shape mismatch {pred.shape} vs {truth.shape}")
    iu = np.triu_indices(pred.shape[0], k=1)
    fwd = pred[iu] != truth[iu]
    bwd = pred.T[iu] != truth.T[iu]
    return int(np.count_nonzero(fwd | bwd))


def causation_scores(graphs):
    """Edge frequencies over predicted graphs.

    A pair present in both directions of one graph (an undirected edge)
    contributes 1/2 to each orientation.
    """
    graphs = [np.asarray(g) != 0 for g in graphs]
    if not graphs:
        raise ContractError("no graphs to aggregate")
    total = np.zeros(graphs[0].shape)
    for g in graphs:
        both = g & g.T
        total += np.where(both, 0.5, g.astype(np.float64))
    total /= len(graphs)
    np.fill_diagonal(total, 0.0)
    return total


def evaluate(scores, truth, threshold=0.5):
    """AUPR of the scores and SHD of the graph thresholded at ``c > threshold``."""
    scores = np.asarray(scores, dtype=np.float64)
    pred = (scores > threshold).astype(int)
    np.fill_diagonal(pred, 0)
    curve = pr_curve(scores, truth)
    return {"aupr": aupr(curve), "shd": shd(pred, truth)}, curve

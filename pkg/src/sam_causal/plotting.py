"""Figures written next to the CSV/JSON reports (PNG, Agg backend)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_pr_curve(curve, path, label=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        # step plot matches the average-precision summation
        ax.step(np.r_[0.0, curve.recall], np.r_[curve.precision[:1], curve.precision],
                where="pre", label=label)
        ax.set_xlabel("recall")
        ax.set_ylabel("precision")
        ax.set_xlim(0, 1.02)
        ax.set_ylim(0, 1.02)
        if label:
            ax.legend(loc="lower left")
        return _save(fig, path)


def plot_structure_losses(losses, path, truth=None):
    """Bar chart of mean +- std fit loss per candidate structure.

    ``losses`` maps structure name to the per-seed losses.
    """
    names = list(losses)
    means = [np.mean(losses[k]) for k in names]
    stds = [np.std(losses[k]) for k in names]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        colors = ["tab:red" if k == truth else "tab:gray" for k in names]
        ax.bar(names, means, yerr=stds, color=colors, capsize=3)
        ax.set_ylabel("fit loss")
        return _save(fig, path)


def plot_capacity_sweep(hidden, causal, anticausal, path):
    """Fit loss vs. generator width for both orientations of a pair."""
    hidden = np.asarray(hidden)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, vals in (("X -> Y", causal), ("Y -> X", anticausal)):
            vals = np.asarray(vals, dtype=np.float64)
            m, s = vals.mean(axis=1), vals.std(axis=1)
            ax.plot(hidden, m, marker="o", label=label)
            ax.fill_between(hidden, m - s, m + s, alpha=0.2)
        ax.set_xscale("log")
        ax.set_xlabel("hidden units per generator")
        ax.set_ylabel("fit loss")
        ax.legend()
        return _save(fig, path)


def plot_trace(trace, path):
    """Per-epoch losses of one training run."""
    keys = [k for k in ("critic", "fit", "sparsity", "acyclicity") if k in trace]
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(keys), 1, sharex=True, figsize=(5.0, 1.3 * len(keys) + 0.6))
        axes = np.atleast_1d(axes)
        for ax, k in zip(axes, keys):
            ax.plot(trace[k], lw=0.6)
            ax.set_ylabel(k)
        axes[-1].set_xlabel("epoch")
        return _save(fig, path)


def plot_scores(scores, names, path):
    """Heat map of the causation-score matrix (row = cause, column = effect)."""
    with plt.rc_context(STYLE):
        d = len(names)
        fig, ax = plt.subplots(figsize=(0.35 * d + 2.0, 0.35 * d + 1.6))
        im = ax.imshow(scores, vmin=0, vmax=1, cmap="viridis")
        ax.set_xticks(range(d), names, rotation=90)
        ax.set_yticks(range(d), names)
        ax.set_xlabel("effect")
        ax.set_ylabel("cause")
        fig.colorbar(im, ax=ax, fraction=0.046)
        return _save(fig, path)

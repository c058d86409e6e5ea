"""Training loop, variants, multi-run ensembling and graph extraction.

One epoch:

1. sample structural/functional gates and the generator noise,
2. generate the ``d`` pseudo-sample sets,
3. one critic ascent step (adversarial variants only),
4. one descent step for every generator and its gate logits on
   fit term + sparsity penalty (+ acyclicity penalty once ``lambda_d`` is on).

The acyclicity weight is 0 for epochs ``t < n_iter // 2`` and ``lambda_d``
afterwards.
"""

import logging
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import critic as critic_mod
from . import generators
from .data import Dataset, standardize
from .errors import ContractError, NumericOverflowError, TrainingDivergedError
from .gates import GateState, open_probability, sample_gates
from .graphs import break_cycles, is_dag
from .numeric import Adam, Rng, Tape
from .penalties import PenaltyWeights, tape_acyclicity, tape_sparsity, trace_series_and_grad

log = logging.getLogger(__name__)

VARIANTS = {
    "sam": (False, "adversarial"),
    "sam-lin": (True, "adversarial"),
    "sam-mse": (False, "mse"),
    "sam-lin-mse": (True, "mse"),
}


@dataclass
class TrainConfig:
    n_hidden: int = 200
    critic_hidden: int = 200
    n_iter: int = 10000
    lr: float = 0.01
    critic_lr: float | None = None
    lambda_s: float = 5.0
    lambda_f: float = 0.005
    lambda_d: float = 1.0
    linear: bool = False
    loss: str = "adversarial"
    nruns: int = 16
    seed: int = 0
    batch_size: int | None = None
    force_dag: bool = False
    jobs: int = 1
    fit_window: float = 0.25

    def __post_init__(self):
        if self.n_iter < 2:
            raise ContractError("n_iter must be at least 2")
        if self.nruns < 1:
            raise ContractError("nruns must be at least 1")
        if self.loss not in ("adversarial", "mse"):
            raise ContractError(f"unknown loss {self.loss!r}")
        if self.batch_size is not None and self.batch_size < 2:
            raise ContractError("batch_size must be at least 2")
        if not 0 < self.fit_window <= 1:
            raise ContractError("fit_window must lie in (0, 1]")

    @classmethod
    def from_variant(cls, variant, **kwargs):
        try:
            linear, loss = VARIANTS[variant]
        except KeyError:
            raise ContractError(f"unknown variant {variant!r}; choose from {sorted(VARIANTS)}") from None
        return cls(linear=linear, loss=loss, **kwargs)

    @property
    def variant(self):
        for name, spec in VARIANTS.items():
            if spec == (self.linear, self.loss):
                return name
        raise AssertionError("unreachable")

    @property
    def switch_epoch(self):
        return self.n_iter // 2

    def lambda_d_at(self, t):
        return 0.0 if t < self.switch_epoch else self.lambda_d

    def to_dict(self):
        out = asdict(self)
        out["variant"] = self.variant
        return out


@dataclass
class RunResult:
    seed: int
    structural_logits: np.ndarray
    functional_logits: np.ndarray | None
    open_probability: np.ndarray
    adjacency: np.ndarray
    trace: dict
    seconds: float = 0.0

    def summary(self):
        return {
            "seed": self.seed,
            "n_edges": int(self.adjacency.sum()),
            "acyclicity": trace_series_and_grad(self.adjacency)[0],
            "is_dag": bool(is_dag(self.adjacency)),
            "final_fit": float(self.trace["fit"][-1]),
            "final_sparsity": float(self.trace["sparsity"][-1]),
            "final_acyclicity_penalty": float(self.trace["acyclicity"][-1]),
            "seconds": round(self.seconds, 3),
        }


@dataclass
class CausationScores:
    scores: np.ndarray
    adjacencies: list
    names: list
    seeds: list = field(default_factory=list)
    runs: list = field(default_factory=list)

    @property
    def nruns(self):
        return len(self.adjacencies)


def _prepare(data):
    if isinstance(data, Dataset):
        X = data.values
    else:
        X = np.asarray(data, dtype=np.float64)
    n, d = X.shape
    if n < 2 or d < 2:
        raise ContractError(f"need n >= 2 and d >= 2, got n={n}, d={d}")
    return standardize(X)


class _Model:
    """Mutable state of one run: generators, gate logits, critic, optimisers."""

    def __init__(self, d, cfg, rng, fixed_A=None):
        self.cfg = cfg
        self.d = d
        nh = None if cfg.linear else cfg.n_hidden
        self.gates = GateState.init(d, nh)
        self.fixed_A = fixed_A
        self.gen = generators.init_params(d, cfg.n_hidden, rng, linear=cfg.linear)
        trainable = dict(self.gen)
        if fixed_A is None:
            trainable["a"] = self.gates.structural
            if not cfg.linear:
                trainable["z"] = self.gates.functional
        self.trainable = trainable
        self.opt = Adam(trainable, lr=cfg.lr)
        self.critic = None
        if cfg.loss == "adversarial":
            clr = cfg.lr if cfg.critic_lr is None else cfg.critic_lr
            self.critic = critic_mod.Critic(d, cfg.critic_hidden, rng, lr=clr)
        self.mask = 1.0 - np.eye(d)


def _epoch(model, X, rng, lambda_d, weights):
    """One epoch of the alternating updates; returns the epoch's loss record."""
    cfg = model.cfg
    n, d = X.shape
    if model.fixed_A is None:
        gs = sample_gates(model.gates, rng)
        A_hard, Z_hard = gs.A, gs.Z
    else:
        gs = None
        A_hard = model.fixed_A
        Z_hard = None if cfg.linear else np.ones((cfg.n_hidden, d))
    E = rng.normal(size=(n, d))

    record = {}
    if model.critic is not None:
        out = generators.generator_outputs(model.gen, X, (A_hard, Z_hard), E)
        fake = generators.pseudo_batch(X, out)
        record["critic"] = model.critic.ascent_step(X, fake)

    tape = Tape()
    p = {k: tape.param(v) for k, v in model.gen.items()}
    if gs is None:
        A, Z = A_hard, Z_hard
    else:
        a_logit = tape.param(model.gates.structural)
        A = tape.straight_through_gate(a_logit, gs.noise_structural, mask=model.mask)
        Z = None
        if not cfg.linear:
            z_logit = tape.param(model.gates.functional)
            Z = tape.straight_through_gate(z_logit, gs.noise_functional)
    out = generators.tape_outputs(tape, p, X, A, Z, E)
    if model.critic is not None:
        fake = generators.tape_pseudo_batch(tape, X, out)
        rows = tape.concat([X, tape.reshape(fake, (d * n, d))])
        cp = {k: tape.const(v) for k, v in model.critic.params.items()}
        # batch statistics are held constant here: letting the generators move
        # them lets fakes inflate the variance and flatten the critic
        scores, _ = critic_mod.tape_scores(tape, cp, rows, frozen_stats=True)
        s_real, s_fake = critic_mod.split_scores(tape, scores, n, d)
        _, fit_terms = critic_mod.tape_fgan(tape, s_real, s_fake)
        fit = tape.sum(fit_terms)
    else:
        fit = critic_mod.tape_mse(tape, X, out)
    loss = fit
    record["fit"] = float(fit.value)
    if gs is not None:
        sp = tape_sparsity(tape, A, Z, weights)
        record["sparsity"] = float(sp.value)
        loss = tape.add(loss, sp)
        acyc = trace_series_and_grad(A_hard)[0]
        record["acyclicity"] = lambda_d * acyc
        record["n_edges"] = float(A_hard.sum())
        if lambda_d > 0:
            loss = tape.add(loss, tape_acyclicity(tape, A, lambda_d))
    tape.backward(loss)
    grads = {k: p[k].grad for k in model.gen}
    if gs is not None:
        grads["a"] = a_logit.grad
        if not cfg.linear:
            grads["z"] = z_logit.grad
    grads = {k: (g if g is not None else np.zeros_like(model.trainable[k])) for k, g in grads.items()}
    model.opt.step(model.trainable, grads)
    return record


def _batch(X, rng, batch_size):
    if batch_size is None or batch_size >= X.shape[0]:
        return X
    idx = np.sort(rng.choice(X.shape[0], size=batch_size, replace=False))
    return X[idx]


def _run_epochs(model, X, cfg, rng, lambda_d_at, weights):
    keys = ("critic", "fit", "sparsity", "acyclicity", "n_edges")
    trace = {k: [] for k in keys}
    last = {}
    for t in range(cfg.n_iter):
        Xb = _batch(X, rng, cfg.batch_size)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                rec = _epoch(model, Xb, rng, lambda_d_at(t), weights)
        except NumericOverflowError as exc:
            raise TrainingDivergedError(f"training diverged at epoch {t}: {exc}", epoch=t,
                                        last_losses=last) from exc
        for k in keys:
            if k in rec:
                trace[k].append(rec[k])
        last = rec
    return {k: np.asarray(v) for k, v in trace.items() if v}


def train_single(data, cfg, seed=None):
    """Train one run from ``seed`` (default ``cfg.seed``) and return its result."""
    X = _prepare(data)
    seed = cfg.seed if seed is None else seed
    n, d = X.shape
    rng = Rng(seed)
    start = time.perf_counter()
    model = _Model(d, cfg, rng)
    weights = PenaltyWeights(cfg.lambda_s, cfg.lambda_f, cfg.lambda_d, n)
    trace = _run_epochs(model, X, cfg, rng, cfg.lambda_d_at, weights)
    prob = open_probability(model.gates)
    adj = (prob > 0.5).astype(np.int64)
    np.fill_diagonal(adj, 0)
    return RunResult(
        seed=seed,
        structural_logits=model.gates.structural.copy(),
        functional_logits=None if model.gates.functional is None else model.gates.functional.copy(),
        open_probability=prob,
        adjacency=adj,
        trace=trace,
        seconds=time.perf_counter() - start,
    )


def _run_member(args):
    X, cfg, seed, index = args
    try:
        return index, train_single(X, cfg, seed), None
    except TrainingDivergedError as exc:
        exc.run_index = index
        return index, None, exc


def aggregate(adjacencies):
    """Edge frequencies over runs, with a zero diagonal."""
    stack = np.stack([np.asarray(a, dtype=np.float64) for a in adjacencies])
    c = stack.sum(axis=0) / len(adjacencies)
    np.fill_diagonal(c, 0.0)
    return c


def train_ensemble(data, cfg, names=None):
    """Run ``cfg.nruns`` independent trainings (seeds seed+0 .. seed+nruns-1)."""
    if isinstance(data, Dataset):
        names = names or data.names
    X = _prepare(data)
    names = list(names) if names else [f"X{i + 1}" for i in range(X.shape[1])]
    seeds = [cfg.seed + r for r in range(cfg.nruns)]
    jobs = max(1, min(cfg.jobs or 1, cfg.nruns))
    tasks = [(X, cfg, s, r) for r, s in enumerate(seeds)]
    if jobs == 1:
        outcomes = [_run_member(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_member, tasks))
    outcomes.sort(key=lambda o: o[0])
    runs = [r for _, r, _ in outcomes if r is not None]
    failures = [e for _, _, e in outcomes if e is not None]
    if failures:
        if 2 * len(runs) < cfg.nruns:
            raise failures[0]
        warnings.warn(
            f"{len(failures)} of {cfg.nruns} runs diverged (first: run {failures[0].run_index}, "
            f"epoch {failures[0].epoch}); aggregating the remaining {len(runs)}",
            RuntimeWarning, stacklevel=2,
        )
    adjs = [r.adjacency for r in runs]
    return CausationScores(aggregate(adjs), adjs, names, [r.seed for r in runs], runs)


def extract_graph(scores, threshold=0.5, force_dag=False):
    """Edges with score strictly above ``threshold``; optionally repaired into a DAG."""
    c = scores.scores if isinstance(scores, CausationScores) else np.asarray(scores, dtype=np.float64)
    adj = (c > threshold).astype(np.int64)
    np.fill_diagonal(adj, 0)
    if force_dag:
        adj = break_cycles(adj, c)
    return adj


def score_fixed_structure(data, adjacency, cfg, seed=None):
    """Fit loss of generators (and critic) trained with the graph held fixed.

    Structural gates are frozen to ``adjacency`` and functional gates held
    open; no complexity penalties apply.  The returned value is the mean
    fit measurement (critic objective, or squared error for ``mse``) over
    the final ``cfg.fit_window`` fraction of epochs.
    """
    adjacency = np.asarray(adjacency, dtype=np.float64)
    X = _prepare(data)
    n, d = X.shape
    if adjacency.shape != (d, d):
        raise ContractError(f"adjacency must be {d}x{d}")
    if not is_dag(adjacency):
        raise ContractError("score_fixed_structure needs an acyclic adjacency")
    seed = cfg.seed if seed is None else seed
    rng = Rng(seed)
    model = _Model(d, cfg, rng, fixed_A=adjacency)
    weights = PenaltyWeights(0.0, 0.0, 0.0, n)
    trace = _run_epochs(model, X, cfg, rng, lambda t: 0.0, weights)
    series = trace["critic"] if cfg.loss == "adversarial" else trace["fit"]
    tail = max(1, int(round(cfg.fit_window * len(series))))
    return float(series[-tail:].mean())


def default_jobs():
    return os.cpu_count() or 1


def with_overrides(cfg, **kwargs):
    return replace(cfg, **{k: v for k, v in kwargs.items() if v is not None})

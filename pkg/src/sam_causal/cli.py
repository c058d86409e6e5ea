"""Command-line entry point: ``sam-causal {run,generate,score,toy}``.

run
    Train an ensemble on a data CSV and write into ``--output``:

    * ``scores.csv``   causation scores (d x d, header = column names)
    * ``graph.csv``    thresholded 0/1 adjacency (score > 0.5)
    * ``graph.dot``    the thresholded graph, edges labelled by score
    * ``manifest.json`` see below
    * ``scores.png``, ``trace.png``   figures (skipped with ``--no-plots``)

    The manifest holds ``config`` (the full training config), ``data``
    (path, sha256, shape, names), ``seeds``, ``runs`` (per-run summary:
    edge count, acyclicity certificate, final penalties, seconds),
    ``traces`` (per-run loss traces, every ``trace_stride``-th epoch) and
    ``timing``.  ``run --replay manifest.json`` retrains from it and
    reproduces ``scores.csv`` exactly.

generate
    ``data.csv`` and ``truth.csv`` for one benchmark mechanism or toy problem.

score
    AUPR/SHD of a score matrix against a truth matrix, printed as JSON;
    ``--pr-out`` also writes the precision-recall curve (CSV + PNG).

toy
    The V-structure and parabola fixed-structure experiments.  Writes
    ``report.json``, a per-seed loss CSV and a figure when ``--output`` is set.

Errors are printed to stderr as one JSON line; the exit code is 0 only on
success.  ``SAM_SEED`` overrides ``--seed`` wherever a seed is accepted.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import benchgen, experiments, metrics, plotting
from .data import Dataset, fmt, read_data_csv, read_matrix_csv, write_data_csv, write_matrix_csv
from .errors import ContractError, DataError, SamError
from .graphs import is_dag
from .numeric import Rng
from .trainer import VARIANTS, TrainConfig, default_jobs, extract_graph, train_ensemble

MAX_VARS = 500
TRACE_POINTS = 1000


def _seed(args):
    env = os.environ.get("SAM_SEED")
    if env is None or env == "":
        return args.seed
    try:
        return int(env)
    except ValueError:
        raise ContractError(f"SAM_SEED must be an integer, got {env!r}") from None


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def write_dot(path, adjacency, scores, names):
    lines = ["digraph G {"]
    lines += [f'  "{n}";' for n in names]
    for i, j in zip(*np.nonzero(adjacency)):
        lines.append(f'  "{names[i]}" -> "{names[j]}" [label="{scores[i, j]:.3g}"];')
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n")


def _thin(trace):
    n = max(len(v) for v in trace.values())
    stride = max(1, -(-n // TRACE_POINTS))
    return stride, {k: [float(x) for x in v[::stride]] for k, v in trace.items()}


# -- run -----------------------------------------------------------------------

def _config_from_args(args):
    return TrainConfig.from_variant(
        args.variant,
        n_hidden=args.nh,
        critic_hidden=args.dnh,
        n_iter=args.niter,
        lr=args.lr,
        lambda_s=args.lambda_s,
        lambda_f=args.lambda_f,
        nruns=args.nruns,
        seed=_seed(args),
        batch_size=args.batch_size,
        force_dag=args.force_dag,
        jobs=args.jobs or default_jobs(),
    )


def _config_from_manifest(path):
    try:
        manifest = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from None
    conf = dict(manifest["config"])
    variant = conf.pop("variant")
    conf.pop("linear"), conf.pop("loss")
    return TrainConfig.from_variant(variant, **conf), manifest["data"]["path"], manifest


def cmd_run(args):
    if args.replay:
        cfg, data_path, old = _config_from_manifest(args.replay)
        data_path = args.data or data_path
        if _sha256(data_path) != old["data"]["sha256"]:
            raise DataError(f"{data_path} differs from the data recorded in the manifest")
    else:
        if not args.data:
            raise ContractError("--data is required unless --replay is given")
        cfg, data_path = _config_from_args(args), args.data
    data = read_data_csv(data_path, max_columns=args.max_vars)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    result = train_ensemble(data, cfg)
    elapsed = time.perf_counter() - start
    adj = extract_graph(result, force_dag=cfg.force_dag)

    write_matrix_csv(out / "scores.csv", result.scores, data.names)
    write_matrix_csv(out / "graph.csv", adj, data.names, integer=True)
    write_dot(out / "graph.dot", adj, result.scores, data.names)
    traces, stride = [], 1
    for r in result.runs:
        stride, thin = _thin(r.trace)
        traces.append({"seed": r.seed, **thin})
    manifest = {
        "config": cfg.to_dict(),
        "data": {"path": str(Path(data_path).resolve()), "sha256": _sha256(data_path),
                 "n": data.n, "d": data.d, "names": data.names},
        "seeds": result.seeds,
        "runs": [r.summary() for r in result.runs],
        "graph_is_dag": bool(is_dag(adj)),
        "trace_stride": stride,
        "traces": traces,
        "timing": {"total_seconds": round(elapsed, 3),
                   "run_seconds": [round(r.seconds, 3) for r in result.runs]},
    }
    _write_json(out / "manifest.json", manifest)
    if not args.no_plots:
        plotting.plot_scores(result.scores, data.names, out / "scores.png")
        plotting.plot_trace(result.runs[0].trace, out / "trace.png")
    print(json.dumps({"output": str(out), "edges": int(adj.sum()), "nruns": result.nruns,
                      "seconds": round(elapsed, 3)}))


# -- generate ------------------------------------------------------------------

def cmd_generate(args):
    seed = _seed(args)
    out = Path(args.output)
    if args.mechanism == "vstructure":
        data, truth = benchgen.toy_vstructure(args.samples, Rng(seed), args.structure)
    elif args.mechanism == "parabola":
        data, truth = benchgen.toy_parabola(args.samples, Rng(seed))
    elif args.mechanism in benchgen.MECHANISMS:
        spec = benchgen.SyntheticSpec(d=args.nodes, n=args.samples, mechanism=args.mechanism, seed=seed)
        data, gt = benchgen.generate_dataset(spec)
        truth = gt.adjacency
    else:
        choices = list(benchgen.MECHANISMS) + list(benchgen.TOYS)
        raise ContractError(f"unknown mechanism {args.mechanism!r}; choose from {choices}")
    out.mkdir(parents=True, exist_ok=True)
    write_data_csv(out / "data.csv", data)
    write_matrix_csv(out / "truth.csv", truth, data.names, integer=True)
    print(json.dumps({"output": str(out), "n": data.n, "d": data.d, "edges": int(np.sum(truth))}))


# -- score ---------------------------------------------------------------------

def cmd_score(args):
    pred, pnames = read_matrix_csv(args.pred)
    truth, tnames = read_matrix_csv(args.truth)
    if pred.shape != truth.shape:
        raise DataError(f"prediction is {pred.shape[0]}x{pred.shape[1]}, truth is {truth.shape[0]}x{truth.shape[1]}")
    if pnames != tnames:
        raise DataError(f"column names differ: {pnames} vs {tnames}")
    wanted = [m.strip() for m in args.metric.split(",") if m.strip()]
    unknown = set(wanted) - {"aupr", "shd"}
    if unknown:
        raise ContractError(f"unknown metric(s) {sorted(unknown)}; choose from aupr, shd")
    values, curve = metrics.evaluate(pred, truth, threshold=args.threshold)
    print(json.dumps({k: values[k] for k in wanted}))
    if args.pr_out:
        with open(args.pr_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "precision", "recall"])
            for row in curve.rows():
                w.writerow([fmt(v) for v in row])
        plotting.plot_pr_curve(curve, Path(args.pr_out).with_suffix(".png"),
                               label=f"AUPR {values['aupr']:.3f}")


# -- toy -----------------------------------------------------------------------

def _parse_hidden(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ContractError(f"--nh expects comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise ContractError("--nh needs at least one positive width")
    return vals


def cmd_toy(args):
    jobs = args.jobs or default_jobs()
    overrides = {"n_iter": args.niter, "seed": _seed(args)}
    if args.dnh:
        overrides["critic_hidden"] = args.dnh
    if args.experiment == "vstructure":
        report = experiments.run_vstructure(args.seeds, args.samples,
                                            experiments.vstructure_config(**overrides), jobs=jobs)
        summary = {"mean": report["mean"], "std": report["std"], "win_rate": report["win_rate"],
                   "true_lowest_mean": report["true_lowest_mean"]}
    else:
        hidden = _parse_hidden(args.nh)
        base = experiments.parabola_config(hidden[0], **overrides)
        report = experiments.run_parabola(args.seeds, hidden, args.samples, base, jobs=jobs)
        summary = {"by_width": [{k: r[k] for k in ("n_hidden", "mean_causal", "mean_anticausal",
                                                   "win_rate", "mean_gap", "gap_se")}
                                for r in report["by_width"]]}
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "report.json", report)
        _write_toy_tables(out, report)
    print(json.dumps(summary))


def _write_toy_tables(out, report):
    with open(out / "losses.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if report["experiment"] == "vstructure":
            names = list(report["losses"])
            w.writerow(["seed"] + names)
            for s in range(report["seeds"]):
                w.writerow([s] + [fmt(report["losses"][k][s]) for k in names])
            plotting.plot_structure_losses(report["losses"], out / "losses.png", truth="v")
        else:
            w.writerow(["n_hidden", "seed", "causal", "anticausal"])
            for r in report["by_width"]:
                for s, (a, b) in enumerate(zip(r["causal"], r["anticausal"])):
                    w.writerow([r["n_hidden"], s, fmt(a), fmt(b)])
            rows = report["by_width"]
            plotting.plot_capacity_sweep([r["n_hidden"] for r in rows], [r["causal"] for r in rows],
                                         [r["anticausal"] for r in rows], out / "losses.png")


# -- parser --------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="sam-causal", description="Causal discovery with gated adversarial generators.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="learn a causal graph from a data CSV")
    p.add_argument("--data", help="CSV with a header row")
    p.add_argument("--output", required=True)
    p.add_argument("--replay", metavar="MANIFEST", help="retrain with the config of a previous run")
    p.add_argument("--nruns", type=int, default=16)
    p.add_argument("--variant", choices=sorted(VARIANTS), default="sam")
    p.add_argument("--niter", type=int, default=10000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--nh", type=int, default=200, help="hidden units per generator")
    p.add_argument("--dnh", type=int, default=200, help="hidden units per critic layer")
    p.add_argument("--lambda-s", type=float, default=5.0)
    p.add_argument("--lambda-f", type=float, default=0.005)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--force-dag", action="store_true")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--jobs", type=int, help="parallel runs (default: all cores)")
    p.add_argument("--max-vars", type=int, default=MAX_VARS)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="write a synthetic dataset and its true graph")
    p.add_argument("--mechanism", required=True)
    p.add_argument("--nodes", type=int, default=20)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--structure", default="v", choices=["v", "chain", "reversed_chain"],
                   help="graph of the vstructure toy")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("score", help="AUPR and SHD against a true graph")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--metric", default="aupr,shd")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--pr-out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("toy", help="fixed-structure toy experiments")
    p.add_argument("--experiment", choices=["vstructure", "parabola"], required=True)
    p.add_argument("--seeds", type=int, default=32)
    p.add_argument("--nh", default="2,5,10,20,50,100", help="generator widths for the parabola sweep")
    p.add_argument("--dnh", type=int, help="critic width")
    p.add_argument("--niter", type=int, default=2000)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int)
    p.add_argument("--output")
    p.set_defaults(func=cmd_toy)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SamError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

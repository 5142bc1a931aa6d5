"""Command-line harness for training, evaluation, and benchmarks.

Subcommands::

    clpc synth          generate a synthetic benchmark (train/cal/test CSVs)
    clpc train          fit a prototype or logistic model, write an artifact
    clpc eval           Top-1 accuracy of an artifact on a dataset
    clpc calibrate      attach a conformal calibrator to an artifact
    clpc conformal-eval prediction-set metrics on a dataset
    clpc noise-sweep    accuracy vs. concept corruption for several models
    clpc intervene-bench steps-to-correction benchmark per strategy
    clpc serve          expose an artifact over HTTP

Every command is deterministic given its flags: rerunning reproduces
byte-identical output files.  JSON reports embed the complete effective
configuration; figure-style tables are emitted as CSV via ``--table``.
Exit status: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .conformal import calibrate, evaluate_conformal, nonconformity_scores
from .data import (
    ArtifactError,
    DatasetError,
    LabeledDataset,
    SynthConfig,
    generate_synthetic,
    load_csv,
    load_model,
    save_model,
    split_dataset,
    trace_records,
    write_csv,
    write_trace_log,
)
from .experiments import intervention_benchmark, noise_sweep, top1_accuracy
from .intervention import (
    SOURCE_ANSATZ,
    SOURCE_GROUND_TRUTH,
    STRATEGIES,
    STRATEGY_CLPC_GAIN,
)
from .model import PrototypeModel
from .train import TrainConfig, train_clpc, train_lr

__all__ = ["main", "build_parser"]


def _write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n",
                          encoding="utf-8")


def _load_aligned(data_path, model) -> LabeledDataset:
    data = load_csv(data_path)
    if data.n_concepts != model.n_concepts:
        raise DatasetError(
            f"model expects K={model.n_concepts} concepts but "
            f"{data_path} has K={data.n_concepts}"
        )
    return data.align_to_classes(list(model.class_names))


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise ValueError(f"{flag} must be a comma-separated number list, got {text!r}") from None
    if not vals:
        raise ValueError(f"{flag} must name at least one value")
    return vals


def _model_names(paths: list[str]) -> list[str]:
    names = []
    for p in paths:
        stem = Path(p).stem
        name = stem
        suffix = 2
        while name in names:
            name = f"{stem}#{suffix}"
            suffix += 1
        names.append(name)
    return names


# ---------------------------------------------------------------------------
# Commands


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        k=args.k, l=args.l, n_samples=args.n,
        concentration_present=tuple(_parse_floats(args.conc_present, "--conc-present")),
        concentration_absent=tuple(_parse_floats(args.conc_absent, "--conc-absent")),
        label_noise=args.label_noise, seed=args.seed,
    )
    fractions = _parse_floats(args.split, "--split")
    if len(fractions) != 3:
        raise ValueError(f"--split needs exactly three fractions, got {len(fractions)}")
    data, prototypes = generate_synthetic(cfg)
    parts = split_dataset(data, fractions)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, part in zip(("train", "cal", "test"), parts):
        write_csv(part, out / f"{name}.csv")
        files[name] = {"path": f"{name}.csv", "rows": part.n_samples}
    manifest = {
        "config": {**cfg.to_dict(), "split": fractions, "out": str(out)},
        "class_names": data.class_names,
        "prototypes": prototypes.tolist(),
        "files": files,
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {out}/{{train,cal,test}}.csv "
          f"({parts[0].n_samples}/{parts[1].n_samples}/{parts[2].n_samples} rows) "
          f"and manifest.json")
    return 0


def cmd_train(args) -> int:
    cfg = TrainConfig(
        lambda_s=args.lambda_s, lambda_b=args.lambda_b,
        learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
        init_mode=args.init, optimizer=args.optimizer,
        weight_decay=args.weight_decay,
    )
    data = load_csv(args.data)
    if args.kind == "clpc":
        model, report = train_clpc(data, cfg)
        last = report.records[-1]
        print(f"clpc: L={model.n_classes} K={model.n_concepts} "
              f"epochs={args.epochs} train_acc={last.train_accuracy:.4f} "
              f"loss={last.total_loss:.6f} binarization_gap={report.binarization_gap:.4f}")
    else:
        model, report = train_lr(data, cfg)
        last = report.records[-1]
        print(f"lr: L={model.n_classes} K={model.n_concepts} "
              f"epochs={args.epochs} train_acc={last.train_accuracy:.4f} "
              f"loss={last.loss:.6f}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    save_model(model, args.out, training={"kind": args.kind, "data": Path(args.data).name,
                                          **cfg.to_dict()})
    print(f"wrote {args.out}")
    return 0


def cmd_eval(args) -> int:
    artifact = load_model(args.model)
    data = _load_aligned(args.data, artifact.model)
    acc = top1_accuracy(artifact.model, data)
    print(f"top1_accuracy {acc!r} (n={data.n_samples}, kind={artifact.kind})")
    if args.out:
        _write_json(args.out, {
            "config": {"command": "eval", "model": str(args.model),
                       "data": str(args.data), "out": str(args.out)},
            "kind": artifact.kind,
            "n_samples": data.n_samples,
            "top1_accuracy": acc,
        })
    return 0


def cmd_calibrate(args) -> int:
    artifact = load_model(args.model)
    data = _load_aligned(args.data, artifact.model)
    scores = nonconformity_scores(artifact.model, data)
    source = (f"{artifact.kind} nonconformity on {Path(args.data).name} "
              f"(n={data.n_samples}, alpha={args.alpha!r})")
    cal = calibrate(scores, alpha=args.alpha, source=source)
    out = args.out or args.model
    save_model(artifact.model, out, calibrator=cal, training=artifact.training)
    q = "inf" if math.isinf(cal.quantile) else repr(cal.quantile)
    print(f"calibrated: n={cal.n_calibration} alpha={args.alpha!r} quantile={q}")
    print(f"wrote {out}")
    return 0


def cmd_conformal_eval(args) -> int:
    artifact = load_model(args.model)
    if artifact.calibrator is None:
        raise ArtifactError(
            f"{args.model}: artifact has no calibrator; run `clpc calibrate` first"
        )
    data = _load_aligned(args.data, artifact.model)
    metrics = evaluate_conformal(artifact.model, artifact.calibrator, data,
                                 alpha=args.alpha)
    alpha = args.alpha if args.alpha is not None else artifact.calibrator.alpha
    quantile = artifact.calibrator.quantile_for(alpha) if args.alpha is not None \
        else artifact.calibrator.quantile
    print(f"set_accuracy {metrics.set_accuracy!r} "
          f"avg_set_size_nonempty {metrics.avg_set_size_nonempty!r} "
          f"reject_ratio {metrics.reject_ratio!r} (n={metrics.n_samples})")
    if args.out:
        _write_json(args.out, {
            "config": {"command": "conformal-eval", "model": str(args.model),
                       "data": str(args.data), "alpha": alpha, "out": str(args.out)},
            "kind": artifact.kind,
            "alpha": alpha,
            "quantile": "inf" if math.isinf(quantile) else quantile,
            "n_samples": metrics.n_samples,
            "set_accuracy": metrics.set_accuracy,
            "avg_set_size_nonempty": metrics.avg_set_size_nonempty,
            "reject_ratio": metrics.reject_ratio,
        })
    return 0


def cmd_noise_sweep(args) -> int:
    levels = _parse_floats(args.levels, "--levels")
    names = _model_names(args.model)
    artifacts = [load_model(p) for p in args.model]
    first = artifacts[0].model
    for p, a in zip(args.model, artifacts):
        if a.model.n_concepts != first.n_concepts:
            raise ArtifactError(
                f"artifacts disagree on K: {args.model[0]} has {first.n_concepts}, "
                f"{p} has {a.model.n_concepts}"
            )
        if a.class_names != artifacts[0].class_names:
            raise ArtifactError(
                f"artifacts disagree on class names: {args.model[0]} vs {p}"
            )
    data = _load_aligned(args.data, first)
    models = {name: a.model for name, a in zip(names, artifacts)}
    kinds = {name: a.kind for name, a in zip(names, artifacts)}

    rows = noise_sweep(models, data, levels, args.repeats, args.seed)
    table = [{**r.to_dict(), "kind": kinds[r.model]} for r in rows]
    for r in table:
        print(f"{r['model']:>12} level {r['level_percent']:5.1f}%  "
              f"mean {r['mean_accuracy']:.4f}  stddev {r['stddev_accuracy']:.4f}")
    _write_json(args.out, {
        "config": {"command": "noise-sweep", "models": [str(p) for p in args.model],
                   "model_names": names, "data": str(args.data), "levels": levels,
                   "repeats": args.repeats, "seed": args.seed, "out": str(args.out),
                   "table": str(args.table) if args.table else None},
        "n_samples": data.n_samples,
        "rows": table,
    })
    if args.table:
        with Path(args.table).open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["model", "kind", "level_percent", "mean_accuracy",
                             "stddev_accuracy", "repeats"])
            for r in table:
                writer.writerow([r["model"], r["kind"], repr(r["level_percent"]),
                                 repr(r["mean_accuracy"]), repr(r["stddev_accuracy"]),
                                 r["repeats"]])
    print(f"wrote {args.out}")
    return 0


def cmd_intervene_bench(args) -> int:
    names = _model_names(args.model)
    artifacts = [load_model(p) for p in args.model]
    requested = args.strategy or None
    if requested is not None:
        for s in requested:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}; choose from {', '.join(STRATEGIES)}")
    correction = SOURCE_GROUND_TRUTH if args.correction == "gt" else SOURCE_ANSATZ

    def compatible(strategy: str, artifact) -> bool:
        return (strategy == STRATEGY_CLPC_GAIN) == isinstance(artifact.model, PrototypeModel)

    if requested is not None:
        for s in requested:
            if not any(compatible(s, a) for a in artifacts):
                kinds = ", ".join(sorted({a.kind for a in artifacts}))
                raise ArtifactError(
                    f"strategy {s!r} has no compatible artifact (loaded kinds: {kinds})"
                )

    model_reports = []
    all_records = []
    for name, path, artifact in zip(names, args.model, artifacts):
        strategies = [s for s in (requested or STRATEGIES) if compatible(s, artifact)]
        if not strategies:
            continue
        data = _load_aligned(args.data, artifact.model)
        wrong, results = intervention_benchmark(
            artifact.model, data, strategies=strategies,
            correction_source=correction, rerank=args.rerank,
        )
        note = "nothing to correct" if len(wrong) == 0 else None
        for bench in results:
            for idx, trace in bench.traces:
                all_records.extend(trace_records(f"{name}:{idx}", trace))
        model_reports.append({
            "name": name,
            "path": str(path),
            "kind": artifact.kind,
            "n_test": data.n_samples,
            "n_misclassified": int(len(wrong)),
            "note": note,
            "strategies": [b.to_dict() for b in results],
        })
        for b in results:
            mean = "n/a" if b.mean_steps is None else f"{b.mean_steps:.3f}"
            print(f"{name:>12} {b.strategy:>9}: cases={b.n_cases} "
                  f"mean_steps={mean} failures={b.failures}"
                  + (f"  [{note}]" if note else ""))

    if not model_reports:
        raise ArtifactError("no (strategy, artifact) pair to benchmark")

    _write_json(args.out, {
        "config": {"command": "intervene-bench", "models": [str(p) for p in args.model],
                   "model_names": names, "data": str(args.data),
                   "strategies": requested or list(STRATEGIES),
                   "correction": args.correction, "rerank": args.rerank,
                   "out": str(args.out),
                   "table": str(args.table) if args.table else None,
                   "trace_log": str(args.trace_log) if args.trace_log else None},
        "models": model_reports,
    })
    if args.table:
        with Path(args.table).open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["model", "kind", "strategy", "steps", "count"])
            for m in model_reports:
                for b in m["strategies"]:
                    for steps, count in b["histogram"].items():
                        writer.writerow([m["name"], m["kind"], b["strategy"],
                                         steps, count])
    if args.trace_log:
        write_trace_log(all_records, args.trace_log)
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.model)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clpc",
        description="Binary class prototypes over concept scores: train, "
                    "calibrate, benchmark, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--k", type=int, required=True, help="number of concepts")
    p.add_argument("--l", type=int, required=True, help="number of classes")
    p.add_argument("--n", type=int, required=True, help="total samples before split")
    p.add_argument("--split", default="0.6,0.2,0.2",
                   help="train,cal,test fractions (default 0.6,0.2,0.2)")
    p.add_argument("--conc-present", default="5,2",
                   help="Beta(a,b) for present concepts (default 5,2)")
    p.add_argument("--conc-absent", default="2,5",
                   help="Beta(a,b) for absent concepts (default 2,5)")
    p.add_argument("--label-noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model and write its artifact")
    p.add_argument("--kind", choices=["clpc", "lr"], default="clpc")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.05, help="learning rate")
    p.add_argument("--lambda-s", type=float, default=0.001, help="sparsity weight")
    p.add_argument("--lambda-b", type=float, default=0.01, help="binarization weight")
    p.add_argument("--init", choices=["class-mean-logit", "zeros"],
                   default="class-mean-logit")
    p.add_argument("--optimizer", choices=["adaptive-moments", "plain-gd"],
                   default="adaptive-moments")
    p.add_argument("--weight-decay", type=float, default=1e-4,
                   help="L2 penalty (lr kind only)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="Top-1 accuracy on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("calibrate", help="attach a conformal calibrator")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", help="output artifact (default: overwrite --model)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("conformal-eval", help="prediction-set metrics")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=None,
                   help="override the stored significance level")
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_conformal_eval)

    p = sub.add_parser("noise-sweep", help="accuracy under concept corruption")
    p.add_argument("--model", action="append", required=True,
                   help="artifact path; repeat to compare models")
    p.add_argument("--data", required=True)
    p.add_argument("--levels", default="0,10,20,30,40,50",
                   help="corruption percentages (default 0,10,20,30,40,50)")
    p.add_argument("--repeats", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--table", help="optional CSV table path")
    p.set_defaults(func=cmd_noise_sweep)

    p = sub.add_parser("intervene-bench", help="steps-to-correction benchmark")
    p.add_argument("--model", action="append", required=True,
                   help="artifact path; repeat to cover both kinds")
    p.add_argument("--data", required=True)
    p.add_argument("--strategy", action="append",
                   help="lr-fi, lr-gain, clpc-gain; repeatable "
                        "(default: all compatible)")
    p.add_argument("--correction", choices=["ansatz", "gt"], default="ansatz")
    p.add_argument("--rerank", action="store_true",
                   help="recompute gains after every edit")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--table", help="optional CSV histogram path")
    p.add_argument("--trace-log", help="optional CSV trace-log path")
    p.set_defaults(func=cmd_intervene_bench)

    p = sub.add_parser("serve", help="expose an artifact over HTTP")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetError, ArtifactError, ValueError, TypeError, RuntimeError,
            OSError) as e:
        print(f"clpc: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

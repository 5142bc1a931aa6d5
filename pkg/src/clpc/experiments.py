"""Batch evaluation protocols: accuracy, noise sweeps, correction benchmarks.

The noise sweep compares classifier heads under increasing concept-score
corruption.  Fairness rule: within one (level, repeat) trial every model is
evaluated on the *same* perturbed copy of the test set, and each trial has
its own deterministic substream (``seed + trial_index``), so adding or
removing a model never changes any other model's numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, n_perturbed, perturb_scores
from .intervention import SOURCE_ANSATZ, SOURCE_GROUND_TRUTH, InterventionTrace, intervene
from .model import PrototypeModel, batch_distances
from .train import LogisticModel, lr_posterior_batch

__all__ = [
    "predict_labels",
    "top1_accuracy",
    "NoiseSweepRow",
    "noise_sweep",
    "StrategyBenchmark",
    "default_strategies",
    "intervention_benchmark",
]


def predict_labels(model, scores: np.ndarray) -> np.ndarray:
    """Top-1 labels for an (N, K) score matrix; ties pick the smaller index."""
    if isinstance(model, PrototypeModel):
        return np.argmin(batch_distances(scores, model.prototypes), axis=1)
    if isinstance(model, LogisticModel):
        return np.argmax(lr_posterior_batch(scores, model), axis=1)
    raise TypeError(f"unsupported model type: {type(model).__name__}")


def top1_accuracy(model, data: LabeledDataset) -> float:
    if data.n_samples == 0:
        raise ValueError("cannot score an empty dataset")
    return float(np.mean(predict_labels(model, data.scores) == data.labels))


@dataclass
class NoiseSweepRow:
    """Accuracy of one model at one corruption level, over all repeats."""

    model: str
    level_percent: float
    mean_accuracy: float
    stddev_accuracy: float  # population stddev (ddof=0)
    repeats: int

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "level_percent": self.level_percent,
            "mean_accuracy": self.mean_accuracy,
            "stddev_accuracy": self.stddev_accuracy,
            "repeats": self.repeats,
        }


def noise_sweep(models: dict, data: LabeledDataset, levels, repeats: int,
                seed: int) -> list[NoiseSweepRow]:
    """Top-1 accuracy per (model, level) under repeated random corruption.

    Trial t of level i uses substream ``seed + i * repeats + t``.  A level
    that perturbs zero concepts (for this K) is evaluated once and reported
    with stddev 0, since every repeat would be identical.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    names = list(models)
    rows = []
    for level_idx, level in enumerate(levels):
        if n_perturbed(level, data.n_concepts) == 0:
            for name in names:
                acc = top1_accuracy(models[name], data)
                rows.append(NoiseSweepRow(name, float(level), acc, 0.0, repeats))
            continue
        accs = {name: np.empty(repeats) for name in names}
        for r in range(repeats):
            rng = np.random.default_rng(seed + level_idx * repeats + r)
            perturbed = perturb_scores(data.scores, level, rng)
            for name in names:
                hits = predict_labels(models[name], perturbed) == data.labels
                accs[name][r] = float(np.mean(hits))
        for name in names:
            rows.append(NoiseSweepRow(
                model=name,
                level_percent=float(level),
                mean_accuracy=float(np.mean(accs[name])),
                stddev_accuracy=float(np.std(accs[name])),
                repeats=repeats,
            ))
    return rows


@dataclass
class StrategyBenchmark:
    """Correction effort for one strategy over all misclassified rows."""

    strategy: str
    correction_source: str
    n_cases: int
    failures: int
    mean_steps: float | None  # over succeeded cases; None if none succeeded
    histogram: dict[int, int] = field(default_factory=dict)  # steps -> count
    traces: list[tuple[int, InterventionTrace]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "correction_source": self.correction_source,
            "n_cases": self.n_cases,
            "failures": self.failures,
            "mean_steps": self.mean_steps,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }


def default_strategies(model) -> list[str]:
    if isinstance(model, PrototypeModel):
        return ["clpc-gain"]
    if isinstance(model, LogisticModel):
        return ["lr-fi", "lr-gain"]
    raise TypeError(f"unsupported model type: {type(model).__name__}")


def intervention_benchmark(model, data: LabeledDataset, strategies=None,
                           correction_source: str = SOURCE_ANSATZ,
                           rerank: bool = False,
                           ) -> tuple[np.ndarray, list[StrategyBenchmark]]:
    """Correct every misclassified row toward its true label.

    Returns the misclassified row indices and one benchmark per strategy.
    With ground-truth corrections the dataset must carry concept
    annotations.
    """
    if strategies is None:
        strategies = default_strategies(model)
    if correction_source == SOURCE_GROUND_TRUTH and data.gt_concepts is None:
        raise ValueError(
            "ground-truth corrections need a dataset with concept annotations"
        )
    wrong = np.flatnonzero(predict_labels(model, data.scores) != data.labels)
    results = []
    for strategy in strategies:
        histogram: dict[int, int] = {}
        traces: list[tuple[int, InterventionTrace]] = []
        failures = 0
        steps_total = 0
        for i in wrong:
            gt = data.gt_concepts[i] if data.gt_concepts is not None else None
            trace = intervene(
                data.scores[i], model, int(data.labels[i]), strategy,
                correction_source=correction_source, gt_concepts=gt,
                rerank=rerank,
            )
            traces.append((int(i), trace))
            if trace.succeeded:
                histogram[trace.steps_used] = histogram.get(trace.steps_used, 0) + 1
                steps_total += trace.steps_used
            else:
                failures += 1
        succeeded = len(wrong) - failures
        results.append(StrategyBenchmark(
            strategy=strategy,
            correction_source=correction_source,
            n_cases=int(len(wrong)),
            failures=failures,
            mean_steps=steps_total / succeeded if succeeded else None,
            histogram=histogram,
            traces=traces,
        ))
    return wrong, results

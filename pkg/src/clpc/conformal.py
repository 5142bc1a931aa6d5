"""Split conformal calibration and set-valued prediction with abstention.

Calibration collects one nonconformity score per held-out sample (the score
of its true class) and takes the finite-sample-corrected quantile at rank
``ceil((N + 1) * (1 - alpha))``.  A test input's prediction set contains
every class whose score is at or below that threshold; it can hold several
labels when the input is ambiguous, and can be empty when the input is far
from every class, in which case the model abstains instead of guessing.
Under exchangeability the true label lands in the set with probability at
least ``1 - alpha``.

Nonconformity families: prototype models score a class by the L1 distance
to its prototype; the logistic baseline by one minus its posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import PrototypeModel, as_concept_scores, batch_distances, distances
from .train import LogisticModel, lr_posterior

__all__ = [
    "ConformalCalibrator",
    "ConformalMetrics",
    "rank_quantile",
    "nonconformity_clpc",
    "nonconformity_lr",
    "nonconformity_scores",
    "calibrate",
    "predict_set",
    "evaluate_conformal",
]


def rank_quantile(scores: np.ndarray, alpha: float) -> float:
    """Finite-sample-corrected ``(1 - alpha)`` quantile of calibration scores.

    Returns the r-th smallest score with ``r = ceil((N + 1) * (1 - alpha))``,
    or +inf when r exceeds N (every class will always be included).  The rank
    is computed in exact rational arithmetic so that values like
    ``(N + 1) * (1 - alpha)`` landing on an integer are not pushed up by
    floating-point error.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1 or scores.size == 0:
        raise ValueError("calibration scores must be a non-empty 1-D array")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    n = scores.size
    r = math.ceil(Fraction(n + 1) * (1 - Fraction(alpha)))
    if r > n:
        return math.inf
    return float(np.sort(scores)[r - 1])


@dataclass
class ConformalCalibrator:
    """Frozen calibration state: sorted scores, level, and threshold.

    ``source`` is a free-form provenance note (e.g. the calibration file a
    command used); it does not affect predictions.
    """

    alpha: float
    scores: np.ndarray  # sorted ascending
    quantile: float  # may be +inf
    source: str | None = None

    @property
    def n_calibration(self) -> int:
        return int(self.scores.size)

    def quantile_for(self, alpha: float) -> float:
        """Threshold at a different significance level, same scores."""
        return rank_quantile(self.scores, alpha)


def calibrate(scores, alpha: float = 0.05, source: str | None = None) -> ConformalCalibrator:
    """Build a calibrator from raw nonconformity scores."""
    scores = np.asarray(scores, dtype=np.float64)
    q = rank_quantile(scores, alpha)  # also validates scores and alpha
    return ConformalCalibrator(
        alpha=alpha, scores=np.sort(scores), quantile=q, source=source
    )


def nonconformity_clpc(c, m: PrototypeModel, j: int) -> float:
    """Distance from ``c`` to class j's prototype."""
    d = distances(c, m)
    if not (0 <= j < d.size):
        raise ValueError(f"class index {j} out of range [0, {d.size})")
    return float(d[j])


def nonconformity_lr(c, m: LogisticModel, j: int) -> float:
    """One minus class j's posterior under the logistic baseline."""
    p = lr_posterior(c, m)
    if not (0 <= j < p.size):
        raise ValueError(f"class index {j} out of range [0, {p.size})")
    return float(1.0 - p[j])


def _score_matrix(model, scores: np.ndarray) -> np.ndarray:
    """Per-class nonconformity scores for N samples, shape (N, L)."""
    if isinstance(model, PrototypeModel):
        if not model.is_finalized:
            from .model import NotFinalizedError

            raise NotFinalizedError("model has no binary prototypes yet")
        return batch_distances(scores, model.prototypes)
    if isinstance(model, LogisticModel):
        from .train import lr_posterior_batch

        return 1.0 - lr_posterior_batch(scores, model)
    raise TypeError(f"unsupported model type: {type(model).__name__}")


def nonconformity_scores(model, data) -> np.ndarray:
    """True-class nonconformity score for every row of a labeled dataset."""
    mat = _score_matrix(model, data.scores)
    return mat[np.arange(data.n_samples), data.labels]


def predict_set(c, model, cal: ConformalCalibrator, alpha: float | None = None) -> list[int]:
    """Classes whose nonconformity is at or below the calibrated threshold.

    Ties at the threshold are included.  The result may be empty (the model
    abstains) or contain all L classes.  Passing ``alpha`` recomputes the
    threshold from the stored calibration scores at that level.
    """
    c = as_concept_scores(c, getattr(model, "n_concepts", None))
    q = cal.quantile if alpha is None else cal.quantile_for(alpha)
    row = _score_matrix(model, c[None, :])[0]
    return [int(j) for j in np.nonzero(row <= q)[0]]


@dataclass
class ConformalMetrics:
    """Set-prediction quality on a labeled test set.

    ``avg_set_size_nonempty`` averages over nonempty sets only and is None
    when every set came back empty.  ``empirical_coverage`` is the same
    number as ``set_accuracy`` (fraction of sets containing the truth),
    reported under the name used when checking the coverage guarantee.
    """

    set_accuracy: float
    avg_set_size_nonempty: float | None
    reject_ratio: float
    n_samples: int

    @property
    def empirical_coverage(self) -> float:
        return self.set_accuracy


def evaluate_conformal(model, cal: ConformalCalibrator, test, alpha: float | None = None) -> ConformalMetrics:
    """Set accuracy, average nonempty set size, and reject ratio on a test set."""
    if test.n_samples == 0:
        raise ValueError("test set is empty")
    q = cal.quantile if alpha is None else cal.quantile_for(alpha)
    mat = _score_matrix(model, test.scores)
    member = mat <= q  # (N, L) inclusion mask
    sizes = member.sum(axis=1)
    hits = member[np.arange(test.n_samples), test.labels]
    nonempty = sizes > 0
    return ConformalMetrics(
        set_accuracy=float(hits.mean()),
        avg_set_size_nonempty=float(sizes[nonempty].mean()) if nonempty.any() else None,
        reject_ratio=float((~nonempty).mean()),
        n_samples=int(test.n_samples),
    )

"""Prototype matching over concept scores.

A finalized model holds one binary prototype per class: the set of concepts
an ideal member of that class should exhibit.  A sample's concept-score
vector is matched against every prototype with the Manhattan (L1) distance,
and the class with the closest prototype wins.  Because the distance is a
plain sum of per-concept terms ``|score_k - bit_k|``, it decomposes exactly
into per-concept contributions that can be shown to a human: for an expected
concept (bit 1) the gap to full confidence, for an unexpected one (bit 0)
any stray activation.

All functions here are pure; a finalized :class:`PrototypeModel` is treated
as immutable and is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BAND_MATCHED_PRESENT",
    "BAND_GAP_PRESENT",
    "BAND_UNDESIRED_ABSENT",
    "NotFinalizedError",
    "PrototypeModel",
    "PredictionResult",
    "ConceptContribution",
    "DistanceDecomposition",
    "as_concept_scores",
    "as_prototype_bits",
    "l1_distance",
    "decompose",
    "distances",
    "batch_distances",
    "predict",
]

# Band labels for the per-concept decomposition.  An expected concept (bit 1)
# is either fully matched or leaves a confidence gap; an unexpected concept
# (bit 0) contributes exactly its stray activation.
BAND_MATCHED_PRESENT = "matched-present"
BAND_GAP_PRESENT = "gap-present"
BAND_UNDESIRED_ABSENT = "undesired-absent"

# Weight magnitude used when a model is built directly from binary prototypes
# rather than trained; sigmoid(12) is within 1e-5 of 1.
_SYNTH_WEIGHT = 12.0


class NotFinalizedError(RuntimeError):
    """An operation needed binary prototypes, but the model only carries
    real-valued weights (training finished without finalization)."""


def as_concept_scores(scores, k: int | None = None) -> np.ndarray:
    """Validate a concept-score vector and return it as a float64 array.

    Scores must be finite and lie in [0, 1].  Out-of-range values are
    rejected rather than clamped: a score outside the unit interval means
    the upstream concept predictor is broken, and clamping would hide that.

    Parameters
    ----------
    scores : array-like of shape (K,)
        Concept confidence scores.
    k : int, optional
        Expected number of concepts; a mismatch raises ``ValueError``.
    """
    c = np.asarray(scores, dtype=np.float64)
    if c.ndim != 1:
        raise ValueError(f"concept scores must be 1-D, got shape {c.shape}")
    if k is not None and c.shape[0] != k:
        raise ValueError(f"expected {k} concept scores, got {c.shape[0]}")
    if not np.all(np.isfinite(c)):
        raise ValueError("concept scores must be finite")
    out = (c < 0.0) | (c > 1.0)
    if np.any(out):
        bad = int(np.argmax(out))
        raise ValueError(
            f"concept score out of [0, 1] at index {bad}: {c[bad]!r}"
        )
    return c


def as_prototype_bits(bits, k: int | None = None) -> np.ndarray:
    """Validate a binary prototype vector and return it as an int64 array.

    Every entry must be exactly 0 or 1.
    """
    p = np.asarray(bits)
    if p.ndim != 1:
        raise ValueError(f"prototype must be 1-D, got shape {p.shape}")
    if k is not None and p.shape[0] != k:
        raise ValueError(f"expected {k} prototype bits, got {p.shape[0]}")
    if not np.all((p == 0) | (p == 1)):
        raise ValueError("prototype entries must be exactly 0 or 1")
    return p.astype(np.int64)


def l1_distance(c, p) -> float:
    """Manhattan distance between a concept-score vector and a prototype.

    Returns ``sum_k |c_k - p_k|``, which lies in [0, K].
    """
    c = as_concept_scores(c)
    p = as_prototype_bits(p)
    if c.shape[0] != p.shape[0]:
        raise ValueError(
            f"dimension mismatch: {c.shape[0]} scores vs {p.shape[0]} prototype bits"
        )
    return float(np.abs(c - p).sum())


@dataclass
class ConceptContribution:
    """One concept's share of the distance to a prototype."""

    concept_index: int
    prototype_bit: int
    score: float
    contribution: float  # |score - prototype_bit|
    band: str


@dataclass
class DistanceDecomposition:
    """Per-concept breakdown of the L1 distance to one prototype.

    The contributions sum to the total distance exactly (same summation as
    :func:`l1_distance`).  For bit-1 concepts the score itself is the
    "matched" green part and the contribution is the yellow gap ``1 - score``;
    for bit-0 concepts the contribution equals the score (red bar).
    """

    per_concept: list[ConceptContribution]
    total: float

    def contributions(self) -> np.ndarray:
        return np.array([pc.contribution for pc in self.per_concept])


def decompose(c, p) -> DistanceDecomposition:
    """Break the distance between scores ``c`` and prototype ``p`` into
    per-concept contributions.

    Band assignment follows the prototype bit: bit 1 concepts are
    ``matched-present`` when the score is exactly 1 (no gap) and
    ``gap-present`` otherwise; bit 0 concepts are ``undesired-absent``.
    """
    c = as_concept_scores(c)
    p = as_prototype_bits(p)
    if c.shape[0] != p.shape[0]:
        raise ValueError(
            f"dimension mismatch: {c.shape[0]} scores vs {p.shape[0]} prototype bits"
        )
    deltas = np.abs(c - p)
    per = []
    for k in range(c.shape[0]):
        if p[k] == 1:
            band = BAND_MATCHED_PRESENT if deltas[k] == 0.0 else BAND_GAP_PRESENT
        else:
            band = BAND_UNDESIRED_ABSENT
        per.append(
            ConceptContribution(
                concept_index=k,
                prototype_bit=int(p[k]),
                score=float(c[k]),
                contribution=float(deltas[k]),
                band=band,
            )
        )
    return DistanceDecomposition(per_concept=per, total=float(deltas.sum()))


@dataclass
class PrototypeModel:
    """Class-level prototype model.

    ``weights`` is the real-valued L x K matrix learned by gradient descent;
    ``prototypes`` is its binarization (entry 1 exactly where the weight is
    >= 0, i.e. where the sigmoid of the weight is >= 0.5) and is present only
    once the model has been finalized for inference.
    """

    class_names: list[str]
    weights: np.ndarray
    prototypes: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be L x K, got shape {self.weights.shape}")
        L, K = self.weights.shape
        if L < 2:
            raise ValueError(f"need at least 2 classes, got {L}")
        if K < 1:
            raise ValueError(f"need at least 1 concept, got {K}")
        if len(self.class_names) != L:
            raise ValueError(
                f"{len(self.class_names)} class names for {L} weight rows"
            )
        if self.prototypes is not None:
            p = np.asarray(self.prototypes)
            if p.shape != (L, K):
                raise ValueError(
                    f"prototype shape {p.shape} does not match weights {self.weights.shape}"
                )
            if not np.all((p == 0) | (p == 1)):
                raise ValueError("prototype entries must be exactly 0 or 1")
            self.prototypes = p.astype(np.int64)
            expected = (self.weights >= 0.0).astype(np.int64)
            if not np.array_equal(self.prototypes, expected):
                raise ValueError(
                    "prototypes are inconsistent with weights: bit must be 1 "
                    "exactly where sigmoid(weight) >= 0.5"
                )

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_concepts(self) -> int:
        return self.weights.shape[1]

    @property
    def is_finalized(self) -> bool:
        return self.prototypes is not None

    @classmethod
    def from_prototypes(cls, prototypes, class_names: list[str] | None = None) -> "PrototypeModel":
        """Build a finalized model directly from binary prototypes.

        Weights are synthesized as +/-12 so that the sigmoid/threshold
        round-trip reproduces the given bits.
        """
        p = np.asarray(prototypes)
        if p.ndim != 2:
            raise ValueError(f"prototypes must be L x K, got shape {p.shape}")
        if not np.all((p == 0) | (p == 1)):
            raise ValueError("prototype entries must be exactly 0 or 1")
        if class_names is None:
            class_names = [f"class_{j}" for j in range(p.shape[0])]
        w = np.where(p == 1, _SYNTH_WEIGHT, -_SYNTH_WEIGHT)
        return cls(class_names=list(class_names), weights=w, prototypes=p.astype(np.int64))


@dataclass
class PredictionResult:
    """Outcome of matching one concept vector against every prototype.

    ``margin`` is the second-smallest distance minus the smallest; 0 means
    an exact tie, which is broken toward the smaller class index.
    """

    label_index: int
    distances: np.ndarray = field(repr=False)
    margin: float


def distances(c, m: PrototypeModel) -> np.ndarray:
    """Distances from ``c`` to every class prototype of a finalized model."""
    if not m.is_finalized:
        raise NotFinalizedError("model has no binary prototypes yet; finalize it first")
    c = as_concept_scores(c, m.n_concepts)
    return np.abs(c[None, :] - m.prototypes).sum(axis=1)


def batch_distances(scores: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    """Distance matrix between N score rows and L prototypes, shape (N, L).

    No per-row validation; callers pass already-validated arrays.
    """
    scores = np.asarray(scores, dtype=np.float64)
    prototypes = np.asarray(prototypes, dtype=np.float64)
    return np.abs(scores[:, None, :] - prototypes[None, :, :]).sum(axis=2)


def predict(c, m: PrototypeModel) -> PredictionResult:
    """Predict the class whose prototype is closest to ``c``.

    Ties are broken toward the smallest class index (``argmin`` convention),
    so predictions are reproducible across runs.
    """
    d = distances(c, m)
    label = int(np.argmin(d))
    two = np.partition(d, 1)[:2]
    return PredictionResult(
        label_index=label,
        distances=d,
        margin=float(two[1] - two[0]),
    )

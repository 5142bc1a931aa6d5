"""Dataset ingestion, synthetic benchmarks, noise injection, persistence.

File formats
------------
Datasets are RFC-4180 CSV (UTF-8) with header
``score_1,...,score_K,label[,gt_1,...,gt_K]``: one confidence score per
concept in [0, 1], a class label string, and optionally the sample's
ground-truth binary concept annotations.  Floats are written with full
round-trip precision.

Model artifacts are a single JSON document carrying the model kind and
parameters, the training configuration that produced them, and (optionally)
the conformal calibrator, so a model and its calibration can never be
mismatched.  The quantile uses the string sentinel ``"inf"`` when the
calibration set was too small for the requested level.

Intervention traces are CSV with one row per edit:
``sample_id,strategy,step,concept_index,gain,old,new,prediction_after``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conformal import ConformalCalibrator
from .model import PrototypeModel
from .train import LogisticModel

__all__ = [
    "DatasetError",
    "ArtifactError",
    "LabeledDataset",
    "SynthConfig",
    "NoiseConfig",
    "load_csv",
    "write_csv",
    "generate_synthetic",
    "split_dataset",
    "n_perturbed",
    "inject_noise",
    "perturb_scores",
    "ModelArtifact",
    "save_model",
    "load_model",
    "TraceRecord",
    "trace_records",
    "write_trace_log",
    "read_trace_log",
]

ARTIFACT_FORMAT_VERSION = 1


class DatasetError(ValueError):
    """A dataset file failed validation; nothing was loaded."""


class ArtifactError(ValueError):
    """A model artifact file is missing, malformed, or of the wrong kind."""


@dataclass
class LabeledDataset:
    """Rows of (concept scores, class label, optional ground-truth concepts).

    ``gt_concepts`` is either present for every row or absent entirely.
    Labels are indices into ``class_names``.
    """

    class_names: list[str]
    scores: np.ndarray  # (N, K) float64 in [0, 1]
    labels: np.ndarray  # (N,) int64 in [0, L)
    gt_concepts: np.ndarray | None = None  # (N, K) int64 bits

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.scores.ndim != 2:
            raise DatasetError(f"scores must be (N, K), got shape {self.scores.shape}")
        n = self.scores.shape[0]
        if self.labels.shape != (n,):
            raise DatasetError(
                f"{self.labels.shape[0] if self.labels.ndim == 1 else '?'} labels for {n} rows"
            )
        if not np.all(np.isfinite(self.scores)):
            raise DatasetError("scores must be finite")
        if self.scores.size and (self.scores.min() < 0.0 or self.scores.max() > 1.0):
            raise DatasetError("scores must lie in [0, 1]")
        L = len(self.class_names)
        if n and (self.labels.min() < 0 or self.labels.max() >= L):
            raise DatasetError(f"labels must lie in [0, {L})")
        if self.gt_concepts is not None:
            g = np.asarray(self.gt_concepts)
            if g.shape != self.scores.shape:
                raise DatasetError(
                    f"gt_concepts shape {g.shape} does not match scores {self.scores.shape}"
                )
            if not np.all((g == 0) | (g == 1)):
                raise DatasetError("gt_concepts entries must be exactly 0 or 1")
            self.gt_concepts = g.astype(np.int64)

    @property
    def n_samples(self) -> int:
        return self.scores.shape[0]

    @property
    def n_concepts(self) -> int:
        return self.scores.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices)
        return LabeledDataset(
            class_names=list(self.class_names),
            scores=self.scores[idx].copy(),
            labels=self.labels[idx].copy(),
            gt_concepts=None if self.gt_concepts is None else self.gt_concepts[idx].copy(),
        )

    def align_to_classes(self, class_names: list[str]) -> "LabeledDataset":
        """Remap labels onto another class-name ordering (e.g. a model's).

        Raises if a label in this dataset is unknown to the target list.
        """
        index = {name: j for j, name in enumerate(class_names)}
        mapping = np.empty(self.n_classes, dtype=np.int64)
        for j, name in enumerate(self.class_names):
            if name not in index:
                raise DatasetError(
                    f"dataset class {name!r} is unknown to the model's class list"
                )
            mapping[j] = index[name]
        return LabeledDataset(
            class_names=list(class_names),
            scores=self.scores.copy(),
            labels=mapping[self.labels],
            gt_concepts=None if self.gt_concepts is None else self.gt_concepts.copy(),
        )


def _parse_header(header: list[str]) -> tuple[int, list[int], int, list[int] | None]:
    names = [h.strip() for h in header]
    score_cols: dict[int, int] = {}
    gt_cols: dict[int, int] = {}
    label_col = None
    for pos, name in enumerate(names):
        if name == "label":
            if label_col is not None:
                raise DatasetError("duplicate 'label' column")
            label_col = pos
        elif name.startswith("score_"):
            try:
                i = int(name[len("score_"):])
            except ValueError:
                raise DatasetError(f"malformed score column name {name!r}") from None
            score_cols[i] = pos
        elif name.startswith("gt_"):
            try:
                i = int(name[len("gt_"):])
            except ValueError:
                raise DatasetError(f"malformed gt column name {name!r}") from None
            gt_cols[i] = pos
        else:
            raise DatasetError(f"unexpected column {name!r}")
    if label_col is None:
        raise DatasetError("missing required 'label' column")
    if not score_cols:
        raise DatasetError("missing score_1..score_K columns")
    k = max(score_cols)
    if sorted(score_cols) != list(range(1, k + 1)):
        raise DatasetError(f"score columns must be score_1..score_{k} with no gaps")
    score_pos = [score_cols[i] for i in range(1, k + 1)]
    gt_pos = None
    if gt_cols:
        if sorted(gt_cols) != list(range(1, k + 1)):
            raise DatasetError(f"gt columns must be gt_1..gt_{k} with no gaps")
        gt_pos = [gt_cols[i] for i in range(1, k + 1)]
    return k, score_pos, label_col, gt_pos


def load_csv(path, class_names: list[str] | None = None) -> LabeledDataset:
    """Load a dataset CSV.

    Class names are collected in order of first appearance unless an
    explicit list is given (then unknown labels are an error).  Every
    malformed value is reported with its data row number (1-based, header
    excluded); nothing is partially loaded.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: file is empty") from None
        k, score_pos, label_col, gt_pos = _parse_header(header)
        width = len(header)

        scores_rows: list[list[float]] = []
        gt_rows: list[list[int]] = []
        label_names: list[str] = []
        for rownum, row in enumerate(reader, start=1):
            if len(row) != width:
                raise DatasetError(
                    f"{path}: row {rownum} has {len(row)} fields, expected {width}"
                )
            vals = []
            for i, pos in enumerate(score_pos, start=1):
                try:
                    v = float(row[pos])
                except ValueError:
                    raise DatasetError(
                        f"{path}: row {rownum}: score_{i} is not a number: {row[pos]!r}"
                    ) from None
                if not math.isfinite(v) or v < 0.0 or v > 1.0:
                    raise DatasetError(
                        f"{path}: row {rownum}: score_{i} out of [0, 1]: {row[pos]!r}"
                    )
                vals.append(v)
            scores_rows.append(vals)
            label_names.append(row[label_col])
            if gt_pos is not None:
                bits = []
                for i, pos in enumerate(gt_pos, start=1):
                    if row[pos] not in ("0", "1"):
                        raise DatasetError(
                            f"{path}: row {rownum}: gt_{i} must be 0 or 1, got {row[pos]!r}"
                        )
                    bits.append(int(row[pos]))
                gt_rows.append(bits)

    if class_names is None:
        class_names = []
        seen = set()
        for name in label_names:
            if name not in seen:
                seen.add(name)
                class_names.append(name)
    index = {name: j for j, name in enumerate(class_names)}
    labels = np.empty(len(label_names), dtype=np.int64)
    for i, name in enumerate(label_names, start=1):
        if name not in index:
            raise DatasetError(f"{path}: row {i}: unknown class label {name!r}")
        labels[i - 1] = index[name]

    return LabeledDataset(
        class_names=list(class_names),
        scores=np.array(scores_rows, dtype=np.float64).reshape(len(scores_rows), k),
        labels=labels,
        gt_concepts=np.array(gt_rows, dtype=np.int64) if gt_pos is not None else None,
    )


def write_csv(data: LabeledDataset, path) -> None:
    """Write a dataset CSV; floats keep full round-trip precision."""
    path = Path(path)
    k = data.n_concepts
    header = [f"score_{i}" for i in range(1, k + 1)] + ["label"]
    if data.gt_concepts is not None:
        header += [f"gt_{i}" for i in range(1, k + 1)]
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i in range(data.n_samples):
            row = [repr(float(v)) for v in data.scores[i]]
            row.append(data.class_names[data.labels[i]])
            if data.gt_concepts is not None:
                row += [str(int(b)) for b in data.gt_concepts[i]]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Synthetic benchmark generation


@dataclass
class SynthConfig:
    """Generator settings for a desk-scale synthetic concept benchmark.

    Each class gets a distinct random binary prototype; scores are drawn
    from a Beta distribution concentrated at the prototype bit
    (``concentration_present`` for bits that are on, ``concentration_absent``
    for bits that are off).  ``label_noise`` reassigns that fraction of
    labels uniformly at random.
    """

    k: int
    l: int
    n_samples: int
    concentration_present: tuple[float, float] = (5.0, 2.0)
    concentration_absent: tuple[float, float] = (2.0, 5.0)
    label_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1 or self.l < 2:
            raise ValueError(f"need k >= 1 and l >= 2, got k={self.k}, l={self.l}")
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if not (0.0 <= self.label_noise <= 1.0):
            raise ValueError(f"label_noise must be in [0, 1], got {self.label_noise}")
        if 2 ** self.k < self.l:
            raise ValueError(
                f"cannot draw {self.l} distinct binary prototypes of length {self.k}"
            )

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "l": self.l,
            "n_samples": self.n_samples,
            "concentration_present": list(self.concentration_present),
            "concentration_absent": list(self.concentration_absent),
            "label_noise": self.label_noise,
            "seed": self.seed,
        }


def generate_synthetic(cfg: SynthConfig) -> tuple[LabeledDataset, np.ndarray]:
    """Generate a labeled dataset from random distinct class prototypes.

    Returns the dataset and the generating L x K prototype matrix.  Fully
    deterministic given ``cfg.seed`` (fixed draw order: prototypes, class
    assignments, scores, label noise).
    """
    rng = np.random.default_rng(cfg.seed)
    prototypes = np.empty((cfg.l, cfg.k), dtype=np.int64)
    seen: set[tuple] = set()
    count = 0
    while count < cfg.l:
        cand = tuple(int(b) for b in rng.integers(0, 2, size=cfg.k))
        if cand in seen:
            continue
        seen.add(cand)
        prototypes[count] = cand
        count += 1

    gen_labels = rng.integers(0, cfg.l, size=cfg.n_samples)
    bits = prototypes[gen_labels]
    a1, b1 = cfg.concentration_present
    a0, b0 = cfg.concentration_absent
    alpha = np.where(bits == 1, a1, a0)
    beta = np.where(bits == 1, b1, b0)
    scores = rng.beta(alpha, beta)

    labels = gen_labels.copy()
    if cfg.label_noise > 0:
        flip = rng.random(cfg.n_samples) < cfg.label_noise
        labels[flip] = rng.integers(0, cfg.l, size=int(flip.sum()))

    data = LabeledDataset(
        class_names=[f"class_{j}" for j in range(cfg.l)],
        scores=scores,
        labels=labels,
        gt_concepts=bits,
    )
    return data, prototypes


def split_dataset(data: LabeledDataset, fractions) -> list[LabeledDataset]:
    """Split rows contiguously into parts of the given fractions.

    Boundaries are placed at round-half-up of the cumulative fractions, so
    the part sizes are deterministic and sum to N exactly.
    """
    fr = [float(x) for x in fractions]
    if any(x < 0 for x in fr) or abs(sum(fr) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be non-negative and sum to 1, got {fr}")
    n = data.n_samples
    bounds = [0]
    acc = 0.0
    for x in fr:
        acc += x
        bounds.append(int(math.floor(acc * n + 0.5)))
    bounds[-1] = n
    return [data.subset(np.arange(bounds[i], bounds[i + 1])) for i in range(len(fr))]


# ---------------------------------------------------------------------------
# Concept-noise protocol


@dataclass
class NoiseConfig:
    """One noise condition: perturb ``level_percent`` of concepts per row."""

    level_percent: float
    repeats: int = 100
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.level_percent <= 100.0):
            raise ValueError(f"level_percent must be in [0, 100], got {self.level_percent}")
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")


def n_perturbed(level_percent: float, k: int) -> int:
    """Number of concepts to perturb: round-half-up of ``t/100 * K``."""
    return int(math.floor(level_percent * k / 100.0 + 0.5))


def inject_noise(c, level_percent: float, rng: np.random.Generator) -> np.ndarray:
    """Perturb one concept vector per the fixed-level noise protocol.

    Picks ``round(t/100 * K)`` distinct concepts uniformly; a score below
    0.5 is replaced by a uniform draw from [0.5, 1], any other score by a
    uniform draw from [0, 0.5).  Every perturbed score lands on the opposite
    side of 0.5 (an original 0.5 counts as the high side).
    """
    from .model import as_concept_scores

    if not (0.0 <= level_percent <= 100.0):
        raise ValueError(f"level_percent must be in [0, 100], got {level_percent}")
    c = as_concept_scores(c).copy()
    m = n_perturbed(level_percent, c.shape[0])
    if m == 0:
        return c
    idx = rng.choice(c.shape[0], size=m, replace=False)
    u = rng.random(m)
    low = c[idx] < 0.5
    c[idx] = np.where(low, 0.5 + 0.5 * u, 0.5 * u)
    return c


def perturb_scores(scores: np.ndarray, level_percent: float, rng: np.random.Generator) -> np.ndarray:
    """Vectorized form of :func:`inject_noise` over an (N, K) score matrix.

    Same per-row semantics (uniform concept subset, side-flipping draws) but
    a different stream-consumption order, so it is not element-identical to
    looping :func:`inject_noise`; use one or the other consistently.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n, k = scores.shape
    m = n_perturbed(level_percent, k)
    out = scores.copy()
    if m == 0:
        return out
    # argsort of iid uniforms = uniformly random permutation per row
    idx = np.argsort(rng.random((n, k)), axis=1)[:, :m]
    rows = np.arange(n)[:, None]
    old = out[rows, idx]
    u = rng.random((n, m))
    out[rows, idx] = np.where(old < 0.5, 0.5 + 0.5 * u, 0.5 * u)
    return out


# ---------------------------------------------------------------------------
# Model artifact persistence


@dataclass
class ModelArtifact:
    """A model plus its optional calibrator and training-config echo."""

    kind: str  # "clpc" | "lr"
    model: PrototypeModel | LogisticModel
    calibrator: ConformalCalibrator | None = None
    training: dict | None = None

    @property
    def n_concepts(self) -> int:
        return self.model.n_concepts

    @property
    def n_classes(self) -> int:
        return self.model.n_classes

    @property
    def class_names(self) -> list[str]:
        return list(self.model.class_names)


def _quantile_to_json(q: float):
    return "inf" if math.isinf(q) else q


def _quantile_from_json(q) -> float:
    if q == "inf":
        return math.inf
    return float(q)


def save_model(model, path, calibrator: ConformalCalibrator | None = None,
               training: dict | None = None) -> None:
    """Write a model (and optional calibrator) as one JSON artifact.

    Serialization is canonical: the same model always produces the same
    bytes, and all floats round-trip exactly.
    """
    if isinstance(model, PrototypeModel):
        if not model.is_finalized:
            raise ArtifactError("refusing to save a non-finalized prototype model")
        kind = "clpc"
    elif isinstance(model, LogisticModel):
        kind = "lr"
    else:
        raise ArtifactError(f"unsupported model type: {type(model).__name__}")

    doc: dict = {
        "format_version": ARTIFACT_FORMAT_VERSION,
        "kind": kind,
        "K": model.n_concepts,
        "L": model.n_classes,
        "class_names": list(model.class_names),
        "weights": model.weights.tolist(),
    }
    if kind == "clpc":
        doc["prototypes"] = model.prototypes.tolist()
    else:
        doc["bias"] = model.bias.tolist()
    doc["training"] = training
    if calibrator is not None:
        doc["calibrator"] = {
            "alpha": float(calibrator.alpha),
            "scores": np.asarray(calibrator.scores, dtype=np.float64).tolist(),
            "quantile": _quantile_to_json(calibrator.quantile),
            "source": calibrator.source,
        }
    else:
        doc["calibrator"] = None
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path, expect_kind: str | None = None) -> ModelArtifact:
    """Load a model artifact; validates version, kind, and shapes."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ArtifactError(f"{path}: no such artifact") from None
    except json.JSONDecodeError as e:
        raise ArtifactError(f"{path}: not a valid artifact file ({e})") from None
    if not isinstance(doc, dict):
        raise ArtifactError(f"{path}: not a valid artifact file (not an object)")

    version = doc.get("format_version")
    if version != ARTIFACT_FORMAT_VERSION:
        raise ArtifactError(
            f"{path}: unsupported format_version {version!r}, expected {ARTIFACT_FORMAT_VERSION}"
        )
    kind = doc.get("kind")
    if kind not in ("clpc", "lr"):
        raise ArtifactError(f"{path}: unknown model kind {kind!r}")
    if expect_kind is not None and kind != expect_kind:
        raise ArtifactError(
            f"{path}: artifact holds a {kind!r} model but a {expect_kind!r} model was requested"
        )

    try:
        k, l = int(doc["K"]), int(doc["L"])
        class_names = [str(x) for x in doc["class_names"]]
        weights = np.array(doc["weights"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"{path}: malformed artifact ({e})") from None
    if weights.shape != (l, k) or len(class_names) != l:
        raise ArtifactError(
            f"{path}: inconsistent shapes: K={k}, L={l}, weights {weights.shape}, "
            f"{len(class_names)} class names"
        )

    try:
        if kind == "clpc":
            prototypes = np.array(doc["prototypes"], dtype=np.int64)
            if prototypes.shape != (l, k):
                raise ArtifactError(
                    f"{path}: prototype shape {prototypes.shape} does not match K={k}, L={l}"
                )
            model = PrototypeModel(class_names=class_names, weights=weights,
                                   prototypes=prototypes)
        else:
            bias = np.array(doc["bias"], dtype=np.float64)
            model = LogisticModel(class_names=class_names, weights=weights, bias=bias)
    except ArtifactError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactError(f"{path}: malformed artifact ({e})") from None

    calibrator = None
    cal_doc = doc.get("calibrator")
    if cal_doc is not None:
        try:
            calibrator = ConformalCalibrator(
                alpha=float(cal_doc["alpha"]),
                scores=np.sort(np.array(cal_doc["scores"], dtype=np.float64)),
                quantile=_quantile_from_json(cal_doc["quantile"]),
                source=cal_doc.get("source"),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ArtifactError(f"{path}: malformed calibrator section ({e})") from None

    return ModelArtifact(kind=kind, model=model, calibrator=calibrator,
                         training=doc.get("training"))


# ---------------------------------------------------------------------------
# Intervention trace logs


@dataclass
class TraceRecord:
    """One concept edit, as written to a trace log."""

    sample_id: str
    strategy: str
    step: int
    concept_index: int
    gain: float
    old: float
    new: float
    prediction_after: int


_TRACE_COLUMNS = ["sample_id", "strategy", "step", "concept_index", "gain",
                  "old", "new", "prediction_after"]


def trace_records(sample_id: str, trace) -> list[TraceRecord]:
    """Flatten an intervention trace into log records (steps 1-based)."""
    return [
        TraceRecord(
            sample_id=sample_id,
            strategy=trace.strategy,
            step=i,
            concept_index=s.concept_index,
            gain=s.gain,
            old=s.old_score,
            new=s.new_score,
            prediction_after=s.prediction_after,
        )
        for i, s in enumerate(trace.steps, start=1)
    ]


def write_trace_log(records, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(_TRACE_COLUMNS)
        for r in records:
            writer.writerow([
                r.sample_id, r.strategy, r.step, r.concept_index,
                repr(float(r.gain)), repr(float(r.old)), repr(float(r.new)),
                r.prediction_after,
            ])


def read_trace_log(path) -> list[TraceRecord]:
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != _TRACE_COLUMNS:
            raise DatasetError(f"{path}: not a trace log (unexpected header {header!r})")
        for row in reader:
            out.append(TraceRecord(
                sample_id=row[0], strategy=row[1], step=int(row[2]),
                concept_index=int(row[3]), gain=float(row[4]), old=float(row[5]),
                new=float(row[6]), prediction_after=int(row[7]),
            ))
    return out

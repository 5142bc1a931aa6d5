"""Training for the prototype model and the logistic-regression baseline.

During training the binary prototypes are relaxed through a sigmoid,
``p_jk = sigmoid(w_jk)``, so the matching loss stays differentiable.  The
objective pulls each sample's concept vector toward its own class's soft
prototype and pushes it away from the other classes' (averaged), plus two
regularizers: an L1 penalty on the soft prototypes (few active concepts per
class) and a binarization penalty ``(1 - p) * p`` (entries near 0 or 1).
After training, weights are thresholded to hard bits for inference.

Both trainers are full-batch and deterministic: same data and config give
bit-identical weight trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.special import expit

from .model import PrototypeModel

__all__ = [
    "TrainConfig",
    "EpochRecord",
    "TrainReport",
    "LREpochRecord",
    "LRTrainReport",
    "LogisticModel",
    "soft_prototypes",
    "prototype_loss",
    "sparsity_loss",
    "binarization_loss",
    "total_loss",
    "loss_gradient",
    "finalize",
    "train_clpc",
    "lr_posterior",
    "lr_posterior_batch",
    "lr_loss",
    "lr_loss_gradient",
    "train_lr",
]

INIT_MODES = ("class-mean-logit", "zeros")
OPTIMIZERS = ("plain-gd", "adaptive-moments")

# Adam constants (first/second moment decay, denominator epsilon).
_BETA1 = 0.9
_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass
class TrainConfig:
    """Hyperparameters shared by both trainers.

    ``weight_decay`` is the L2 penalty used only by the logistic-regression
    baseline; the prototype model uses ``lambda_s``/``lambda_b`` instead.
    """

    lambda_s: float = 0.001
    lambda_b: float = 0.01
    learning_rate: float = 0.05
    epochs: int = 500
    seed: int = 0
    init_mode: str = "class-mean-logit"
    optimizer: str = "adaptive-moments"
    weight_decay: float = 1e-4

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise ValueError(f"epochs must be a positive integer, got {self.epochs}")
        if self.lambda_s < 0 or self.lambda_b < 0:
            raise ValueError("lambda_s and lambda_b must be >= 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}, got {self.init_mode!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpochRecord:
    """Loss components and accuracy after one epoch (epoch 0 = initial state)."""

    epoch: int
    prototype_loss: float
    sparsity_loss: float
    binarization_loss: float
    total_loss: float
    train_accuracy: float


@dataclass
class TrainReport:
    """Per-epoch training trace plus end-of-training summary statistics.

    ``binarization_gap`` is the fraction of soft-prototype entries within
    0.1 of their nearest bit when training ended.
    """

    records: list[EpochRecord] = field(default_factory=list)
    binarization_gap: float = 0.0
    warnings: list[str] = field(default_factory=list)


def soft_prototypes(weights: np.ndarray) -> np.ndarray:
    """Sigmoid-relaxed prototypes used during training."""
    return expit(np.asarray(weights, dtype=np.float64))


def prototype_loss(c, target: int, weights: np.ndarray) -> float:
    """Matching loss for one sample against the soft prototypes.

    Distance to the target class's soft prototype minus the mean distance to
    the other classes'.  Needs at least two classes (the second term divides
    by L - 1).
    """
    weights = np.asarray(weights, dtype=np.float64)
    L = weights.shape[0]
    if L < 2:
        raise ValueError(f"prototype loss needs at least 2 classes, got {L}")
    if not (0 <= target < L):
        raise ValueError(f"target class {target} out of range [0, {L})")
    c = np.asarray(c, dtype=np.float64)
    d = np.abs(c[None, :] - soft_prototypes(weights)).sum(axis=1)
    others = np.delete(d, target)
    return float(d[target] - others.sum() / (L - 1))


def sparsity_loss(weights: np.ndarray) -> float:
    """Sum of all soft-prototype entries (their L1 norm, entries being >= 0)."""
    return float(soft_prototypes(weights).sum())


def binarization_loss(weights: np.ndarray) -> float:
    """Sum of ``(1 - p) * p`` over soft-prototype entries.

    Zero exactly when every entry is binary; each entry contributes at most
    0.25 (at p = 0.5).
    """
    s = soft_prototypes(weights)
    return float(((1.0 - s) * s).sum())


def total_loss(
    scores: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    lambda_s: float,
    lambda_b: float,
) -> float:
    """Mean per-sample matching loss plus the two regularizers.

    The regularizers are added once for the batch, not per sample.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 2 or scores.shape[0] == 0:
        raise ValueError("batch must be a non-empty (N, K) array")
    N = scores.shape[0]
    s = soft_prototypes(weights)
    # (N, L) distance matrix against soft prototypes
    d = np.abs(scores[:, None, :] - s[None, :, :]).sum(axis=2)
    L = s.shape[0]
    if L < 2:
        raise ValueError(f"need at least 2 classes, got {L}")
    d_target = d[np.arange(N), labels]
    d_rest = d.sum(axis=1) - d_target
    lp = d_target - d_rest / (L - 1)
    return float(lp.mean() + lambda_s * sparsity_loss(weights) + lambda_b * binarization_loss(weights))


def loss_gradient(
    scores: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    lambda_s: float,
    lambda_b: float,
) -> np.ndarray:
    """Analytic gradient of :func:`total_loss` with respect to the weights.

    Uses the subgradient choice sign(0) = 0 at the kinks of the absolute
    value, which makes an exactly-matched concept a stable fixed point.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 2 or scores.shape[0] == 0:
        raise ValueError("batch must be a non-empty (N, K) array")
    weights = np.asarray(weights, dtype=np.float64)
    N = scores.shape[0]
    L, K = weights.shape
    if L < 2:
        raise ValueError(f"need at least 2 classes, got {L}")
    s = expit(weights)
    sp = s * (1.0 - s)  # sigmoid derivative
    # sign(soft_jk - c_ik): (N, L, K)
    sgn = np.sign(s[None, :, :] - scores[:, None, :])
    onehot = np.zeros((N, L))
    onehot[np.arange(N), labels] = 1.0
    coef = onehot - (1.0 - onehot) / (L - 1)
    core = np.einsum("nl,nlk->lk", coef, sgn) / N
    return sp * (core + lambda_s + lambda_b * (1.0 - 2.0 * s))


def finalize(weights: np.ndarray) -> np.ndarray:
    """Threshold weights to hard prototype bits.

    A bit is 1 exactly when sigmoid(w) >= 0.5, i.e. when w >= 0 (the
    boundary w = 0 rounds up).
    """
    return (np.asarray(weights, dtype=np.float64) >= 0.0).astype(np.int64)


class _Adam:
    """Plain Adam state for one parameter array."""

    def __init__(self, shape):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, w: np.ndarray, g: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = _BETA1 * self.m + (1.0 - _BETA1) * g
        self.v = _BETA2 * self.v + (1.0 - _BETA2) * g * g
        m_hat = self.m / (1.0 - _BETA1 ** self.t)
        v_hat = self.v / (1.0 - _BETA2 ** self.t)
        return w - lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)


def _logit(p: np.ndarray) -> np.ndarray:
    return np.log(p / (1.0 - p))


def _init_weights(data, cfg: TrainConfig, warnings_out: list[str]) -> np.ndarray:
    L, K = data.n_classes, data.n_concepts
    if cfg.init_mode == "zeros":
        return np.zeros((L, K))
    w = np.zeros((L, K))
    for j in range(L):
        rows = data.scores[data.labels == j]
        if rows.shape[0] == 0:
            warnings_out.append(
                f"class {j} ({data.class_names[j]!r}) has no training samples; "
                "initializing its prototype weights to 0"
            )
            continue
        mean = np.clip(rows.mean(axis=0), 0.01, 0.99)
        w[j] = _logit(mean)
    return w


def _clpc_accuracy(scores: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    bits = finalize(weights)
    d = np.abs(scores[:, None, :] - bits[None, :, :].astype(np.float64)).sum(axis=2)
    return float((d.argmin(axis=1) == labels).mean())


def _epoch_record(epoch, scores, labels, weights, cfg) -> EpochRecord:
    N = scores.shape[0]
    L = weights.shape[0]
    s = expit(weights)
    d = np.abs(scores[:, None, :] - s[None, :, :]).sum(axis=2)
    d_target = d[np.arange(N), labels]
    lp = float((d_target - (d.sum(axis=1) - d_target) / (L - 1)).mean())
    ls = sparsity_loss(weights)
    lb = binarization_loss(weights)
    return EpochRecord(
        epoch=epoch,
        prototype_loss=lp,
        sparsity_loss=ls,
        binarization_loss=lb,
        total_loss=lp + cfg.lambda_s * ls + cfg.lambda_b * lb,
        train_accuracy=_clpc_accuracy(scores, labels, weights),
    )


def train_clpc(data, cfg: TrainConfig | None = None) -> tuple[PrototypeModel, TrainReport]:
    """Train class-level prototypes by full-batch gradient descent.

    Returns a finalized model (hard binary prototypes) and the per-epoch
    report; record 0 describes the initial weights before any update.
    Deterministic: no randomness enters the optimization.
    """
    cfg = cfg or TrainConfig()
    if data.n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {data.n_classes}")
    if data.n_samples == 0:
        raise ValueError("training data is empty")
    report = TrainReport()
    w = _init_weights(data, cfg, report.warnings)
    scores, labels = data.scores, data.labels

    report.records.append(_epoch_record(0, scores, labels, w, cfg))
    adam = _Adam(w.shape) if cfg.optimizer == "adaptive-moments" else None
    for epoch in range(1, cfg.epochs + 1):
        g = loss_gradient(scores, labels, w, cfg.lambda_s, cfg.lambda_b)
        if adam is not None:
            w = adam.step(w, g, cfg.learning_rate)
        else:
            w = w - cfg.learning_rate * g
        report.records.append(_epoch_record(epoch, scores, labels, w, cfg))

    s = expit(w)
    report.binarization_gap = float((np.minimum(s, 1.0 - s) <= 0.1).mean())
    model = PrototypeModel(
        class_names=list(data.class_names),
        weights=w,
        prototypes=finalize(w),
    )
    return model, report


# ---------------------------------------------------------------------------
# Multinomial logistic-regression baseline


@dataclass
class LogisticModel:
    """Multinomial logistic regression over concept scores."""

    class_names: list[str]
    weights: np.ndarray  # (L, K)
    bias: np.ndarray  # (L,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be L x K, got shape {self.weights.shape}")
        L = self.weights.shape[0]
        if self.bias.shape != (L,):
            raise ValueError(f"bias shape {self.bias.shape} does not match {L} classes")
        if len(self.class_names) != L:
            raise ValueError(f"{len(self.class_names)} class names for {L} weight rows")

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def n_concepts(self) -> int:
        return self.weights.shape[1]


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def lr_posterior(c, m: LogisticModel) -> np.ndarray:
    """Class posterior for one concept vector (softmax of W c + b)."""
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (m.n_concepts,):
        raise ValueError(f"expected {m.n_concepts} concept scores, got shape {c.shape}")
    return _softmax(m.weights @ c + m.bias)


def lr_posterior_batch(scores: np.ndarray, m: LogisticModel) -> np.ndarray:
    """Class posteriors for an (N, K) score matrix, shape (N, L)."""
    scores = np.asarray(scores, dtype=np.float64)
    return _softmax(scores @ m.weights.T + m.bias[None, :])


def lr_loss(
    scores: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    weight_decay: float,
) -> float:
    """Mean cross-entropy plus ``weight_decay/2 * ||W||^2`` (bias undecayed)."""
    scores = np.asarray(scores, dtype=np.float64)
    z = scores @ np.asarray(weights).T + np.asarray(bias)[None, :]
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = scores.shape[0]
    ce = -float(logp[np.arange(n), labels].mean())
    return ce + 0.5 * weight_decay * float((np.asarray(weights) ** 2).sum())


def lr_loss_gradient(
    scores: np.ndarray,
    labels: np.ndarray,
    weights: np.ndarray,
    bias: np.ndarray,
    weight_decay: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of :func:`lr_loss` with respect to weights and bias."""
    scores = np.asarray(scores, dtype=np.float64)
    n = scores.shape[0]
    p = _softmax(scores @ np.asarray(weights).T + np.asarray(bias)[None, :])
    p[np.arange(n), labels] -= 1.0
    gw = p.T @ scores / n + weight_decay * np.asarray(weights)
    gb = p.mean(axis=0)
    return gw, gb


@dataclass
class LREpochRecord:
    epoch: int
    loss: float  # penalized mean cross-entropy
    train_accuracy: float


@dataclass
class LRTrainReport:
    records: list[LREpochRecord] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def train_lr(data, cfg: TrainConfig | None = None) -> tuple[LogisticModel, LRTrainReport]:
    """Fit the logistic-regression baseline by full-batch gradient descent.

    Reuses :class:`TrainConfig`; only ``learning_rate``, ``epochs``,
    ``optimizer`` and ``weight_decay`` apply.
    """
    cfg = cfg or TrainConfig()
    if data.n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {data.n_classes}")
    if data.n_samples == 0:
        raise ValueError("training data is empty")
    L, K = data.n_classes, data.n_concepts
    scores, labels = data.scores, data.labels
    w = np.zeros((L, K))
    b = np.zeros(L)
    report = LRTrainReport()

    def record(epoch):
        loss = lr_loss(scores, labels, w, b, cfg.weight_decay)
        p = _softmax(scores @ w.T + b[None, :])
        acc = float((p.argmax(axis=1) == labels).mean())
        report.records.append(LREpochRecord(epoch, loss=loss, train_accuracy=acc))

    record(0)
    adam_w = _Adam(w.shape) if cfg.optimizer == "adaptive-moments" else None
    adam_b = _Adam(b.shape) if cfg.optimizer == "adaptive-moments" else None
    for epoch in range(1, cfg.epochs + 1):
        gw, gb = lr_loss_gradient(scores, labels, w, b, cfg.weight_decay)
        if adam_w is not None:
            w = adam_w.step(w, gw, cfg.learning_rate)
            b = adam_b.step(b, gb, cfg.learning_rate)
        else:
            w = w - cfg.learning_rate * gw
            b = b - cfg.learning_rate * gb
        record(epoch)

    model = LogisticModel(class_names=list(data.class_names), weights=w, bias=b)
    return model, report

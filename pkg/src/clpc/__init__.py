"""Binary class prototypes over concept scores.

A small, deterministic toolkit for the second stage of concept-based
classifiers: learn one binary prototype per class from predicted concept
scores, classify by Manhattan distance, decompose each decision into
per-concept contributions, wrap predictions in split-conformal sets, and
rank concept corrections by how much they move a sample toward a target
class.  A logistic-regression head, a CLI harness, and an HTTP what-if
service round out the package.
"""

from .conformal import (
    ConformalCalibrator,
    ConformalMetrics,
    calibrate,
    evaluate_conformal,
    nonconformity_clpc,
    nonconformity_lr,
    nonconformity_scores,
    predict_set,
    rank_quantile,
)
from .data import (
    ArtifactError,
    DatasetError,
    LabeledDataset,
    ModelArtifact,
    NoiseConfig,
    SynthConfig,
    TraceRecord,
    generate_synthetic,
    inject_noise,
    load_csv,
    load_model,
    n_perturbed,
    perturb_scores,
    read_trace_log,
    save_model,
    split_dataset,
    trace_records,
    write_csv,
    write_trace_log,
)
from .experiments import (
    NoiseSweepRow,
    StrategyBenchmark,
    default_strategies,
    intervention_benchmark,
    noise_sweep,
    predict_labels,
    top1_accuracy,
)
from .intervention import (
    SOURCE_ANSATZ,
    SOURCE_GROUND_TRUTH,
    STRATEGIES,
    STRATEGY_CLPC_GAIN,
    STRATEGY_LR_FI,
    STRATEGY_LR_GAIN,
    InterventionStep,
    InterventionTrace,
    clpc_gain,
    correction_target,
    generic_gain,
    intervene,
    lr_fi_order,
    lr_gain,
)
from .model import (
    BAND_GAP_PRESENT,
    BAND_MATCHED_PRESENT,
    BAND_UNDESIRED_ABSENT,
    ConceptContribution,
    DistanceDecomposition,
    NotFinalizedError,
    PredictionResult,
    PrototypeModel,
    as_concept_scores,
    as_prototype_bits,
    batch_distances,
    decompose,
    distances,
    l1_distance,
    predict,
)
from .train import (
    EpochRecord,
    LogisticModel,
    LREpochRecord,
    LRTrainReport,
    TrainConfig,
    TrainReport,
    binarization_loss,
    finalize,
    loss_gradient,
    lr_loss,
    lr_loss_gradient,
    lr_posterior,
    lr_posterior_batch,
    prototype_loss,
    soft_prototypes,
    sparsity_loss,
    total_loss,
    train_clpc,
    train_lr,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "PrototypeModel", "PredictionResult", "NotFinalizedError",
    "ConceptContribution", "DistanceDecomposition",
    "BAND_MATCHED_PRESENT", "BAND_GAP_PRESENT", "BAND_UNDESIRED_ABSENT",
    "as_concept_scores", "as_prototype_bits", "l1_distance", "distances",
    "batch_distances", "predict", "decompose",
    # train
    "TrainConfig", "TrainReport", "EpochRecord", "LRTrainReport",
    "LREpochRecord", "LogisticModel", "soft_prototypes", "prototype_loss",
    "sparsity_loss", "binarization_loss", "total_loss", "loss_gradient",
    "finalize", "train_clpc", "train_lr", "lr_posterior",
    "lr_posterior_batch", "lr_loss", "lr_loss_gradient",
    # conformal
    "ConformalCalibrator", "ConformalMetrics", "rank_quantile", "calibrate",
    "nonconformity_clpc", "nonconformity_lr", "nonconformity_scores",
    "predict_set", "evaluate_conformal",
    # intervention
    "STRATEGIES", "STRATEGY_LR_FI", "STRATEGY_LR_GAIN", "STRATEGY_CLPC_GAIN",
    "SOURCE_ANSATZ", "SOURCE_GROUND_TRUTH", "InterventionStep",
    "InterventionTrace", "clpc_gain", "lr_gain", "generic_gain",
    "lr_fi_order", "correction_target", "intervene",
    # data
    "DatasetError", "ArtifactError", "LabeledDataset", "SynthConfig",
    "NoiseConfig", "load_csv", "write_csv", "generate_synthetic",
    "split_dataset", "n_perturbed", "inject_noise", "perturb_scores",
    "ModelArtifact", "save_model", "load_model", "TraceRecord",
    "trace_records", "write_trace_log", "read_trace_log",
    # experiments
    "predict_labels", "top1_accuracy", "NoiseSweepRow", "noise_sweep",
    "StrategyBenchmark", "default_strategies", "intervention_benchmark",
]

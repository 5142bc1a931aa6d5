"""Turn point predictions into calibrated prediction sets.

Split conformal prediction: score a held-out calibration split with the
model's nonconformity (distance to the true class prototype), take the
rank-based quantile, and return every class whose score clears it.  The set
is allowed to be empty, which is an explicit "none of the known classes"
rejection.  Run with ``python3 demos/03_conformal_sets.py``.
"""

import numpy as np

from clpc import (
    SynthConfig,
    TrainConfig,
    calibrate,
    evaluate_conformal,
    generate_synthetic,
    nonconformity_scores,
    predict_set,
    split_dataset,
    train_clpc,
)

data, _ = generate_synthetic(SynthConfig(k=16, l=8, n_samples=4500, seed=3))
train, cal, test = split_dataset(data, (4 / 9, 1 / 9, 4 / 9))
model, _ = train_clpc(train, TrainConfig(epochs=100))

alpha = 0.1
calibrator = calibrate(nonconformity_scores(model, cal), alpha=alpha,
                       source=f"demo calibration (n={cal.n_samples})")
print(f"alpha={alpha}: distance quantile {calibrator.quantile:.3f} "
      f"from {cal.n_samples} calibration samples")

metrics = evaluate_conformal(model, calibrator, test)
print(f"coverage on {metrics.n_samples} test points: "
      f"{metrics.empirical_coverage:.3f} (target >= {1 - alpha})")
print(f"average nonempty set size {metrics.avg_set_size_nonempty:.2f}, "
      f"reject ratio {metrics.reject_ratio:.3f}")

# tighter alpha -> larger quantile -> supersets (never contradictory sets)
sample = test.scores[0]
for a in (0.2, 0.1, 0.01):
    s = predict_set(sample, model, calibrator, alpha=a)
    names = [model.class_names[j] for j in s]
    print(f"alpha={a:<5} set {names if names else '[] (rejected)'}")

# a vector far from every prototype is rejected instead of guessed
garbage = np.full(model.n_concepts, 0.5)
print(f"all-0.5 scores: set {predict_set(garbage, model, calibrator)}")

"""Walk through one prediction of the binary-prototype classifier.

Each class is a vector of 0/1 bits over K concepts.  A sample's concept
scores live in [0, 1], the predicted class is the prototype at the smallest
L1 distance, and that distance splits exactly into one non-negative
contribution per concept.  Run with ``python3 demos/01_distance_decomposition.py``.
"""

import numpy as np

from clpc import PrototypeModel, decompose, predict

prototypes = [
    [1, 1, 0, 1, 0, 1, 0, 0],  # "songbird": beak, wings, perching feet...
    [0, 0, 1, 0, 1, 0, 1, 1],  # "raptor"
]
model = PrototypeModel.from_prototypes(prototypes, ["songbird", "raptor"])

scores = np.array([0.7, 0.9, 0.1, 1.0, 0.0, 0.8, 0.5, 0.2])

result = predict(scores, model)
print(f"scores        {np.array2string(scores, precision=2)}")
print(f"distances     songbird={result.distances[0]:.2f}  raptor={result.distances[1]:.2f}")
print(f"prediction    {model.class_names[result.label_index]}  (margin {result.margin:.2f})")
print()

# the winning distance, concept by concept
dec = decompose(scores, model.prototypes[result.label_index])
print(f"why distance {dec.total:.2f}?  bit  score  contribution  band")
for pc in dec.per_concept:
    print(f"  concept {pc.concept_index}       {pc.prototype_bit}    "
          f"{pc.score:.2f}   {pc.contribution:.2f}          {pc.band}")
print()

# contributions are an exact split of the distance, not an approximation
assert dec.contributions().sum() == result.distances[result.label_index]
print("sum of contributions equals the distance exactly")

# pushing a score toward the prototype bit can only shrink the distance
nudged = scores.copy()
nudged[0] = 1.0
print(f"raising concept 0 to 1.0: distance {predict(nudged, model).distances[0]:.2f}"
      f" (was {result.distances[0]:.2f})")

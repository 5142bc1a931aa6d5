"""Distance, prediction, and decomposition behavior of the prototype model."""

import numpy as np
import numpy.testing as npt
import pytest

from clpc.model import (
    BAND_GAP_PRESENT,
    BAND_MATCHED_PRESENT,
    BAND_UNDESIRED_ABSENT,
    NotFinalizedError,
    PrototypeModel,
    as_concept_scores,
    as_prototype_bits,
    batch_distances,
    decompose,
    distances,
    l1_distance,
    predict,
)


def test_as_concept_scores_accepts_unit_interval():
    c = as_concept_scores([0.0, 0.5, 1.0])
    assert c.dtype == np.float64
    npt.assert_array_equal(c, [0.0, 0.5, 1.0])


def test_as_concept_scores_rejects_out_of_range():
    with pytest.raises(ValueError, match="index 1"):
        as_concept_scores([0.3, 1.2, 0.5])
    with pytest.raises(ValueError, match="index 0"):
        as_concept_scores([-0.1])


def test_as_concept_scores_rejects_nan_and_shape():
    with pytest.raises(ValueError):
        as_concept_scores([0.1, np.nan])
    with pytest.raises(ValueError):
        as_concept_scores([[0.1], [0.2]])
    with pytest.raises(ValueError):
        as_concept_scores([0.1, 0.2], k=3)


def test_as_prototype_bits_strict():
    p = as_prototype_bits([1, 0, 1])
    assert p.dtype == np.int64
    with pytest.raises(ValueError):
        as_prototype_bits([0.5, 1.0])
    with pytest.raises(ValueError):
        as_prototype_bits([2, 0])


def test_l1_distance_hand_value():
    assert l1_distance([1.0, 0.0], [0, 1]) == pytest.approx(2.0, abs=0)
    assert l1_distance([0.25, 0.5], [1, 0]) == pytest.approx(1.25, abs=1e-15)


def test_l1_distance_zero_iff_equal_bits():
    assert l1_distance([1.0, 0.0, 1.0], [1, 0, 1]) == 0.0


def test_predict_hand_case():
    m = PrototypeModel.from_prototypes([[1, 0], [0, 1]])
    res = predict([0.9, 0.2], m)
    npt.assert_allclose(res.distances, [0.3, 1.7], atol=1e-15)
    assert res.label_index == 0
    assert res.margin == pytest.approx(1.4, abs=1e-15)


def test_predict_tie_breaks_to_smaller_index():
    m = PrototypeModel.from_prototypes([[1, 1], [1, 0], [0, 1], [0, 0]])
    res = predict([0.5, 0.0], m)
    npt.assert_allclose(res.distances, [1.5, 0.5, 1.5, 0.5], atol=1e-15)
    assert res.label_index == 1
    assert res.margin == pytest.approx(0.0, abs=0)


def test_distances_matches_batch(rng=np.random.default_rng(7)):
    protos = rng.integers(0, 2, size=(5, 9))
    m = PrototypeModel.from_prototypes(protos)
    scores = rng.random((20, 9))
    batch = batch_distances(scores, m.prototypes)
    for i in range(scores.shape[0]):
        npt.assert_array_equal(distances(scores[i], m), batch[i])


def test_decompose_total_equals_distance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        k = int(rng.integers(1, 12))
        c = rng.random(k)
        p = rng.integers(0, 2, size=k)
        d = decompose(c, p)
        assert d.total == l1_distance(c, p)
        assert float(d.contributions().sum()) == d.total


def test_decompose_bands():
    d = decompose([1.0, 0.6, 0.3], [1, 1, 0])
    bands = [pc.band for pc in d.per_concept]
    assert bands == [BAND_MATCHED_PRESENT, BAND_GAP_PRESENT, BAND_UNDESIRED_ABSENT]
    contrib = [pc.contribution for pc in d.per_concept]
    npt.assert_allclose(contrib, [0.0, 0.4, 0.3], atol=1e-15)
    # bit-0 concepts: the contribution is the score itself
    assert d.per_concept[2].score == d.per_concept[2].contribution


def test_decompose_length_mismatch():
    with pytest.raises(ValueError):
        decompose([0.5], [1, 0])


def test_model_validates_consistency():
    with pytest.raises(ValueError):
        PrototypeModel(class_names=["a", "b"], weights=np.array([[1.0], [-1.0]]),
                       prototypes=np.array([[0], [1]]))  # inverted bits


def test_model_requires_two_classes():
    with pytest.raises(ValueError):
        PrototypeModel.from_prototypes([[1, 0]])


def test_model_rejects_duplicate_name_count():
    with pytest.raises(ValueError):
        PrototypeModel(class_names=["a"], weights=np.zeros((2, 3)))


def test_from_prototypes_default_names():
    m = PrototypeModel.from_prototypes([[1, 0], [0, 1]])
    assert m.class_names == ["class_0", "class_1"]
    assert m.is_finalized
    npt.assert_array_equal(m.prototypes, [[1, 0], [0, 1]])


def test_weight_zero_maps_to_bit_one():
    # the binarization threshold is sigmoid(w) >= 0.5, i.e. w >= 0
    m = PrototypeModel(class_names=["a", "b"],
                       weights=np.array([[0.0, -0.1], [1.0, 2.0]]),
                       prototypes=np.array([[1, 0], [1, 1]]))
    assert m.is_finalized


def test_not_finalized_prediction_raises():
    m = PrototypeModel(class_names=["a", "b"], weights=np.zeros((2, 3)))
    assert not m.is_finalized
    with pytest.raises(NotFinalizedError):
        predict([0.1, 0.2, 0.3], m)


def test_batch_distances_shape_and_values():
    protos = np.array([[1, 0, 1], [0, 0, 0]])
    scores = np.array([[1.0, 0.0, 1.0], [0.5, 0.5, 0.5]])
    d = batch_distances(scores, protos)
    npt.assert_allclose(d, [[0.0, 2.0], [1.5, 1.5]], atol=1e-15)

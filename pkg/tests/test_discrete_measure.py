"""
测度的构造与基本运算
"""

import logging
import math

import numpy as np
import pytest

from wasserstein_viscosity.discrete_measure import (MeasureSetSequence, dirac, escaping_mixture, mean,
                                                    measure_from_json, measure_to_json, p_moment, push_forward,
                                                    translate, validate_measure)
from wasserstein_viscosity.errors import (DimensionError, DomainError, EmptyCollection, EmptyMeasure, InvalidWeight,
                                          MapRangeError, NotNormalized, ParseError)


def test_merges_duplicate_atoms():
    m = validate_measure([[0.0], [0.0], [1.0]], [0.25, 0.25, 0.5])
    assert m.size == 2
    assert m.atoms() == [((0.0,), 0.5), ((1.0,), 0.5)]


def test_flat_support_is_one_dimensional():
    m = validate_measure([0.0, 2.0], [0.5, 0.5])
    assert m.dim == 1
    assert m.support.shape == (2, 1)


def test_prunes_zero_weights():
    m = validate_measure([[0.0], [1.0]], [1.0, 0.0])
    assert m.size == 1
    assert m.weights[0] == 1.0


@pytest.mark.parametrize("support, weights, error", [
    ([], [], EmptyMeasure),
    ([[0.0], [1.0]], [1.5, -0.5], InvalidWeight),
    ([[0.0], [1.0]], [0.5, 0.4], NotNormalized),
    ([[0.0], [math.nan]], [0.5, 0.5], DomainError),
    ([[0.0], [1.0]], [1.0], DimensionError),
    ([[0.0], [1.0]], [1.0, math.inf], InvalidWeight),
])
def test_invalid_measures(support, weights, error):
    with pytest.raises(error):
        validate_measure(support, weights)


def test_renormalizes_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        m = validate_measure([[0.0], [1.0]], [0.5, 0.4999999995])
    assert math.isclose(float(np.sum(m.weights)), 1.0, abs_tol=1e-15)
    assert any("[Measure]" in r.message for r in caplog.records)


def test_validation_is_idempotent(measure_factory):
    for _ in range(10):
        m = measure_factory()
        again = validate_measure(m.support, m.weights)
        assert again.atoms() == m.atoms()


def test_dirac_mean_and_moment():
    m = validate_measure([[0.0], [2.0]], [0.5, 0.5])
    assert dirac([3.0, 4.0]).size == 1
    assert mean(m)[0] == 1.0
    assert p_moment(m, 2.0, [0.0]) == 2.0
    with pytest.raises(DomainError):
        p_moment(m, 0.5, [0.0])
    with pytest.raises(DimensionError):
        p_moment(m, 2.0, [0.0, 0.0])


def test_push_forward_merges_images():
    m = validate_measure([[-1.0], [1.0]], [0.25, 0.75])
    image = push_forward(m, lambda x: np.abs(x))
    assert image.size == 1
    assert image.weights[0] == 1.0
    with pytest.raises(MapRangeError):
        push_forward(m, lambda x: x * math.inf)


def test_translate():
    m = validate_measure([[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5])
    moved = translate(m, [0.0, 2.0])
    assert moved.support.tolist() == [[0.0, 2.0], [1.0, 2.0]]
    with pytest.raises(DimensionError):
        translate(m, [1.0])


def test_escaping_mixture():
    assert escaping_mixture(1).atoms() == [((1.0,), 1.0)]
    m = escaping_mixture(3, 2.0)
    assert m.support[:, 0].tolist() == [0.0, 9.0]
    assert math.isclose(m.weights[1], 1.0 / 9.0)


def test_measure_json():
    m = validate_measure([[0.5, -1.0], [2.0, 3.0]], [0.25, 0.75])
    back = measure_from_json(measure_to_json(m))
    assert back.atoms() == m.atoms()
    with pytest.raises(ParseError):
        measure_from_json({"support": [[0.0]]})
    with pytest.raises(ParseError):
        measure_from_json({"dim": 2, "support": [[0.0]], "weights": [1.0]})
    with pytest.raises(ParseError):
        measure_from_json([1, 2])


def test_measure_set_sequence():
    seq = MeasureSetSequence(lambda n: [dirac([float(n)])] if n > 1 else [], lambda n: 2.0 * n)
    assert seq.sets(2)[0].support[0, 0] == 2.0
    assert seq.shift(3) == 6.0
    with pytest.raises(EmptyCollection):
        seq.sets(1)

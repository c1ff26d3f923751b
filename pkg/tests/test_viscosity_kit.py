"""
测度场、斜率估计、粘性检验与贪心下降
"""

import math

import numpy as np
import pytest

from wasserstein_viscosity.base_space import BusemannField, DistanceToPoints, kinked_field, min_combine
from wasserstein_viscosity.discrete_measure import MeasureSetSequence, dirac, escaping_mixture, validate_measure
from wasserstein_viscosity.errors import (DescentStalled, DimensionError, EmptyCollection, InvalidRay,
                                          NoUsablePairs, PreconditionError, UnsupportedField)
from wasserstein_viscosity.ot_exact import wasserstein_distance
from wasserstein_viscosity.viscosity_kit import (FAIL, INCONCLUSIVE, PASS, BusemannMeasureField, ConstantField,
                                                 DistanceField, DlcLimitField, InfField, calibration_errors,
                                                 dlg_test, global_slope_estimate, greedy_descent, inf_of_fields,
                                                 lift, lifted_ray, lipschitz_ratio, local_slope_estimate,
                                                 measure_field_from_config, replay_witness, representation_check,
                                                 sublevel_witness_sequence, viscosity_sphere_test)
from wasserstein_viscosity.wgeom import dirac_ray, translation_ray


@pytest.fixture
def min_field():
    base = min_combine([BusemannField([1.0, 0.0], 0.5), BusemannField([0.0, 1.0]),
                        BusemannField([-math.sqrt(0.5), -math.sqrt(0.5)], -0.25)])
    return lift(base, 2.0)


def test_lifted_evaluation():
    U = lift(BusemannField([1.0]), 2.0)
    m = validate_measure([[1.0], [3.0]], [0.5, 0.5])
    assert U.evaluate(m) == -2.0
    assert U.analytic
    with pytest.raises(DimensionError):
        U.evaluate(dirac([0.0, 0.0]))
    assert not lift(kinked_field()).analytic


def test_lipschitz_ratio(min_field, measure_factory):
    pairs = [(measure_factory(), measure_factory()) for _ in range(20)]
    assert lipschitz_ratio(min_field, pairs) <= 1.0 + 1e-9
    with pytest.raises(NoUsablePairs):
        lipschitz_ratio(min_field, [(pairs[0][0], pairs[0][0])])


def test_lifted_ray_is_calibrated(min_field, measure_factory):
    for _ in range(5):
        ray = lifted_ray(min_field, measure_factory(max_atoms=6))
        drop_err, span_err = calibration_errors(min_field, ray)
        assert drop_err <= 1e-10
        assert span_err <= 1e-8


def test_lifted_ray_needs_lifted_field(two_point):
    with pytest.raises(UnsupportedField):
        lifted_ray(ConstantField(), two_point)
    with pytest.raises(UnsupportedField):
        lifted_ray(lift(DistanceToPoints([[0.0]])), two_point)


def test_inf_of_fields():
    a, b = ConstantField(1.0), ConstantField(-1.0)
    U = inf_of_fields([a, b])
    assert isinstance(U, InfField)
    assert U.evaluate(dirac([0.0])) == -1.0
    assert inf_of_fields([a]) is a
    with pytest.raises(EmptyCollection):
        inf_of_fields([])
    with pytest.raises(PreconditionError):
        inf_of_fields([ConstantField(0.0, 2.0), ConstantField(0.0, 1.0)])


def test_distance_field_descent_candidate():
    U = DistanceField(dirac([5.0]), offset=1.0)
    omega = dirac([0.0])
    assert U.evaluate(omega) == 4.0
    candidate = U.descent_candidate(omega, 1.0)
    assert candidate.atoms() == [((1.0,), 1.0)]
    assert U.descent_candidate(omega, 6.0) is None


def test_busemann_field_is_memoized(measure_factory):
    U = BusemannMeasureField(dirac_ray([1.0, 0.0]), t_max=1e4)
    omega = measure_factory()
    first = U.evaluate(omega)
    assert U.evaluate(omega) == first
    assert len(U._memo) == 1
    assert math.isclose(first, -float(omega.weights @ omega.support[:, 0]), abs_tol=1e-6)


def test_sphere_test_passes_for_lifted_field(min_field, measure_factory, rng):
    verdict = viscosity_sphere_test(min_field, measure_factory(), rng=rng)
    assert verdict.verdict == PASS
    assert verdict.witness["source"] == "analytic"
    for detail in verdict.details:
        assert detail["status"] == PASS


def test_sphere_test_fails_for_constant(rng):
    omega = validate_measure([[1.0], [-2.0]], [0.5, 0.5])
    verdict = viscosity_sphere_test(ConstantField(0.0), omega, rng=rng)
    assert verdict.verdict == FAIL
    for detail, r in zip(verdict.details, (1.0, 0.5, 0.1)):
        assert detail["best_gap"] >= 0.9 * r


def test_sphere_test_is_inconclusive_without_analytic_argument(rng):
    verdict = viscosity_sphere_test(lift(kinked_field()), dirac([-1.0]), rng=rng)
    assert verdict.verdict == INCONCLUSIVE


def test_witness_replays(min_field, measure_factory, rng):
    omega = measure_factory()
    verdict = viscosity_sphere_test(min_field, omega, rng=rng)
    witness = verdict.witness
    assert math.isclose(replay_witness(min_field, omega, witness), witness["ratio"], abs_tol=1e-12)


def test_slopes_of_kinked_field(rng):
    U = lift(kinked_field())
    omega = dirac([-1.0])
    glob = global_slope_estimate(U, omega, [dirac([float(y)]) for y in range(1, 101)])
    assert glob.value >= 0.99
    local = local_slope_estimate(U, omega, radii=(0.5, 0.25, 0.1), rng=rng)
    assert local.value == 0.0
    with pytest.raises(PreconditionError):
        local_slope_estimate(U, omega, radii=(0.1, 0.5))
    with pytest.raises(NoUsablePairs):
        global_slope_estimate(U, omega, [omega])


def test_local_slope_of_lifted_field(min_field, measure_factory, rng):
    estimate = local_slope_estimate(min_field, measure_factory(), rng=rng)
    assert estimate.value == pytest.approx(1.0, abs=1e-9)


def test_dlg_test(min_field, measure_factory, rng):
    omega = measure_factory()
    u0 = min_field.evaluate(omega)
    verdict = dlg_test(min_field, omega, [u0 - 0.5, u0 - 3.0], rng=rng)
    assert verdict.verdict == PASS
    with pytest.raises(PreconditionError):
        dlg_test(min_field, omega, [u0 + 1.0])
    assert dlg_test(ConstantField(0.0), omega, [-1.0], rng=rng).verdict == FAIL


def test_greedy_descent_satisfies_inequality(min_field, measure_factory, rng):
    omega = measure_factory()
    poly = greedy_descent(min_field, omega, eps=1e-2, steps=20, rng=rng)
    assert len(poly.vertices) == 21
    assert poly.satisfies_inequality()
    assert poly.max_defect() <= 1e-2
    escapes = poly.escape_distances(2.0)
    assert all(d >= t - 1e-2 - 1e-9 for d, t in zip(escapes, poly.times))


def test_greedy_descent_recovers_subray(min_field, measure_factory):
    ray = lifted_ray(min_field, measure_factory())
    start = ray.eval(2.0)
    poly = greedy_descent(min_field, start, eps=1e-2, steps=5)
    for k, vertex in enumerate(poly.vertices):
        assert wasserstein_distance(vertex, ray.eval(2.0 + k)) <= 1e-9


def test_greedy_descent_stalls_for_constant(two_point, rng):
    with pytest.raises(DescentStalled) as info:
        greedy_descent(ConstantField(0.0), two_point, rng=rng)
    assert info.value.step == 1
    assert info.value.best_gap >= 0.9
    with pytest.raises(PreconditionError):
        greedy_descent(ConstantField(0.0), two_point, eps=0.0)


def test_representation_formula(measure_factory):
    U = lift(BusemannField([0.6, 0.8], 0.3), 2.0)
    rays = [lifted_ray(U, measure_factory(max_atoms=4)) for _ in range(3)]
    verdict = representation_check(U, measure_factory(max_atoms=4), rays)
    assert verdict.verdict == PASS
    assert abs(verdict.witness["busemann"]) <= 1e-6
    assert all(d["holds"] for d in verdict.details)


def test_representation_rejects_uncalibrated_rays(measure_factory):
    U = lift(BusemannField([1.0, 0.0]), 2.0)
    wrong = translation_ray(measure_factory(), [0.0, 1.0])
    with pytest.raises(InvalidRay):
        representation_check(U, measure_factory(), [wrong])


def test_dlc_limit_recovers_lifted_field(min_field, measure_factory):
    corpus = [measure_factory() for _ in range(4)]
    U = DlcLimitField(sublevel_witness_sequence(min_field, corpus), p=2.0, n_max=256)
    for omega in corpus:
        assert math.isclose(U.evaluate(omega), min_field.evaluate(omega), abs_tol=1e-6)


def test_ex3_limit_is_pointwise():
    # u_n = W_2(., omega_n) - n 在 delta_1 处的闭式
    for n in (2, 10, 50):
        U = DistanceField(escaping_mixture(n), offset=float(n))
        assert math.isclose(U.evaluate(dirac([1.0])), math.sqrt(n * n - 1.0) - n, abs_tol=1e-10)


def test_measure_field_from_config():
    U = measure_field_from_config({"type": "inf", "fields": [
        {"type": "busemann", "direction": [1.0], "offset": 0.0},
        {"type": "constant", "c": -3.0},
    ]})
    assert U.evaluate(dirac([1.0])) == -3.0
    assert U.evaluate(dirac([5.0])) == -5.0
    D = measure_field_from_config({"type": "distance", "target": {"support": [[2.0]], "weights": [1.0]}})
    assert isinstance(D, DistanceField)
    assert D.evaluate(dirac([0.0])) == 2.0


@pytest.fixture
def two_busemann():
    return inf_of_fields([lift(BusemannField([1.0, 0.0]), 2.0),
                          lift(BusemannField([-math.sqrt(0.5), math.sqrt(0.5)], 0.5), 2.0)])


def test_inf_of_lifted_fields_passes_sphere_test(two_busemann, measure_factory, rng):
    for _ in range(10):
        verdict = viscosity_sphere_test(two_busemann, measure_factory(), rng=rng)
        assert verdict.verdict == PASS


def test_inf_with_dominating_constant_fails(measure_factory, rng):
    U = inf_of_fields([lift(BusemannField([1.0, 0.0]), 2.0), ConstantField(-1e6)])
    assert U.analytic
    assert viscosity_sphere_test(U, measure_factory(), rng=rng).verdict == FAIL


def test_distance_field_calibrates_toward_target(rng):
    U = DistanceField(dirac([0.0]))
    verdict = viscosity_sphere_test(U, dirac([3.0]), rng=rng)
    assert verdict.verdict == PASS
    assert verdict.witness["ratio"] >= 1.0 - 1e-12


def test_greedy_descent_on_inf_field(two_busemann, measure_factory, rng):
    poly = greedy_descent(two_busemann, measure_factory(), eps=0.5, steps=10, rng=rng)
    assert len(poly.vertices) == 11
    assert poly.satisfies_inequality()


def test_dlc_field_walks_toward_receding_set(rng):
    seq = MeasureSetSequence(lambda n: [dirac([float(n)])], lambda n: float(n))
    U = DlcLimitField(seq, p=2.0, n_max=64)
    candidate = U.descent_candidate(dirac([0.0]), 1.0)
    assert wasserstein_distance(candidate, dirac([1.0])) <= 1e-12
    assert U.descent_candidate(dirac([63.5]), 1.0) is None
    assert viscosity_sphere_test(U, dirac([-0.5]), rng=rng).verdict == PASS


def test_analytic_flags():
    busemann = lift(BusemannField([1.0, 0.0]), 2.0)
    distance = DistanceField(dirac([0.0, 0.0]))
    assert busemann.analytic
    assert ConstantField(0.0).analytic
    assert not distance.analytic
    assert not DlcLimitField(MeasureSetSequence(lambda n: [dirac([float(n)])], lambda n: float(n))).analytic
    assert InfField([busemann, ConstantField(1.0)]).analytic
    assert not InfField([busemann, distance]).analytic

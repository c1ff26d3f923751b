"""
精确运输求解器之间的交叉校验以及与闭式解的比较
"""

import math

import numpy as np
import pytest

from wasserstein_viscosity.discrete_measure import dirac, translate, validate_measure
from wasserstein_viscosity.errors import DimensionError, DomainError, InstanceTooLarge, SolverStalled
from wasserstein_viscosity.ot_exact import (TransportationSimplex, brute_force_oracle, cost_matrix, linprog_oracle,
                                            solve, wasserstein_1d_oracle, wasserstein_distance, wasserstein_exact)


def test_dirac_against_two_points():
    mu = dirac([0.0])
    nu = validate_measure([[-1.0], [1.0]], [0.5, 0.5])
    for p in (1.0, 2.0, 3.0):
        assert math.isclose(wasserstein_distance(mu, nu, p), 1.0, abs_tol=1e-12)


def test_identical_measures_have_zero_distance(two_point):
    result = wasserstein_exact(two_point, two_point, 2.0)
    assert result.value == 0.0
    assert result.plan.is_valid()


def test_crossed_supports_need_pivots():
    mu = validate_measure([[0.0], [1.0]], [0.5, 0.5])
    nu = validate_measure([[1.0], [0.0]], [0.5, 0.5])
    assert wasserstein_exact(mu, nu, 2.0).value == 0.0
    solver = TransportationSimplex(mu.weights, nu.weights, cost_matrix(mu, nu, 2.0))
    solver.solve()
    assert solver.iterations >= 1
    with pytest.raises(SolverStalled):
        wasserstein_exact(mu, nu, 2.0, max_iter=0)


def test_northwest_corner_basis_size():
    supply = np.array([0.25, 0.25, 0.5])
    demand = np.array([0.5, 0.5])
    solver = TransportationSimplex(supply, demand, np.ones((3, 2)))
    plan, basis = solver.northwest_corner()
    assert len(basis) == 3 + 2 - 1
    assert np.allclose(plan.sum(axis=1), supply)
    assert np.allclose(plan.sum(axis=0), demand)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_simplex_matches_quantile_oracle(measure_factory, p):
    for _ in range(15):
        mu = measure_factory(dim=1, max_atoms=12, scale=5.0)
        nu = measure_factory(dim=1, max_atoms=12, scale=5.0)
        exact = wasserstein_exact(mu, nu, p)
        assert math.isclose(exact.value, wasserstein_1d_oracle(mu, nu, p).value, abs_tol=1e-9)
        assert exact.plan.is_valid()


def test_simplex_matches_brute_force(measure_factory):
    for k in range(20):
        d = 1 + k % 3
        mu = measure_factory(dim=d, max_atoms=4)
        nu = measure_factory(dim=d, max_atoms=4)
        assert math.isclose(wasserstein_distance(mu, nu), brute_force_oracle(mu, nu).value, abs_tol=1e-9)


def test_brute_force_permutations(measure_factory):
    mu = measure_factory(dim=2, atoms=6, uniform=True)
    nu = measure_factory(dim=2, atoms=6, uniform=True)
    assert math.isclose(wasserstein_distance(mu, nu), brute_force_oracle(mu, nu).value, abs_tol=1e-9)


def test_brute_force_rejects_large_instances(measure_factory):
    mu = measure_factory(dim=2, atoms=6)
    nu = measure_factory(dim=2, atoms=5)
    with pytest.raises(InstanceTooLarge):
        brute_force_oracle(mu, nu)


def test_simplex_matches_linprog(measure_factory):
    for _ in range(5):
        mu = measure_factory(dim=2, atoms=10, scale=3.0)
        nu = measure_factory(dim=2, atoms=12, scale=3.0)
        assert math.isclose(wasserstein_distance(mu, nu), linprog_oracle(mu, nu).value, abs_tol=1e-8)


def test_metric_axioms(measure_factory):
    for _ in range(10):
        a, b, c = measure_factory(), measure_factory(), measure_factory()
        ab, ba = wasserstein_distance(a, b), wasserstein_distance(b, a)
        assert math.isclose(ab, ba, abs_tol=1e-9)
        assert ab <= wasserstein_distance(a, c) + wasserstein_distance(c, b) + 1e-9


def test_invalid_inputs():
    with pytest.raises(DimensionError):
        wasserstein_exact(dirac([0.0]), dirac([0.0, 0.0]))
    with pytest.raises(DomainError):
        wasserstein_exact(dirac([0.0]), dirac([1.0]), p=0.5)
    with pytest.raises(DimensionError):
        wasserstein_1d_oracle(dirac([0.0, 0.0]), dirac([1.0, 0.0]))
    with pytest.raises(DomainError):
        solve(dirac([0.0]), dirac([1.0]), solver="sinkhorn")


def test_transport_result_serialization(two_point):
    data = solve(two_point, dirac([0.5]), 2.0, "simplex").to_dict()
    assert data["solver"] == "simplex"
    assert math.isclose(data["value"], 0.5)
    assert sorted(data["plan"]) == [[0, 0, 0.5], [1, 0, 0.5]]


def test_translation_exactness(measure_factory, rng):
    for p in (1.0, 2.0, 3.0):
        mu = measure_factory(max_atoms=6)
        v = rng.normal(size=2)
        assert math.isclose(wasserstein_distance(mu, translate(mu, v), p), float(np.linalg.norm(v)), abs_tol=1e-9)


def test_wasserstein_monotone_in_p(measure_factory):
    for _ in range(10):
        mu, nu = measure_factory(), measure_factory()
        w1, w2, w3 = (wasserstein_distance(mu, nu, p) for p in (1.0, 2.0, 3.0))
        assert w1 <= w2 + 1e-9
        assert w2 <= w3 + 1e-9

import math

import numpy as np
import pytest
from pydantic import ValidationError

from emoselect.core import Bounds, Population, RandomSource
from emoselect.exceptions import ConfigurationException, ContractViolationException
from emoselect.problems import SHIPPED_PAIRS, make_problem, random_rotation
from emoselect.variation import (
    CrossoverConfig,
    CrossoverMethod,
    OperatorParameters,
    blx_alpha,
    generate_children,
    pcx,
    polynomial_mutation,
    rex,
    sbx_batch,
    sbx_pair,
    sbx_spread_factor,
    spx,
)

SAMPLES = 100_000


def _parents(k: int, n: int, seed: int = 2) -> np.ndarray:
    return RandomSource(seed).normal(1.0, (k, n))


def _ml_covariance(P: np.ndarray) -> np.ndarray:
    return np.cov(P, rowvar=False, bias=True)


def _unbiased_covariance(P: np.ndarray) -> np.ndarray:
    return np.cov(P, rowvar=False, bias=False)


def _relative_error(estimate: np.ndarray, target: np.ndarray) -> float:
    return float(np.linalg.norm(estimate - target) / np.linalg.norm(target))


def _pcx_sample(P: np.ndarray, cfg: CrossoverConfig, rng: RandomSource, per_center: int) -> np.ndarray:
    return np.vstack([pcx(P, p, cfg, rng, size=per_center) for p in range(P.shape[0])])


def test_resolved_defaults() -> None:
    cfg = CrossoverConfig.forDimension("SPX", 10)
    assert cfg.k == 11
    assert cfg.epsilon == pytest.approx(math.sqrt(12))
    assert cfg.sigma_sq == pytest.approx(0.1)
    assert cfg.p_m == pytest.approx(0.1)
    assert CrossoverConfig.forDimension(CrossoverMethod.SBX, 5).k == 2


def test_two_parent_operators_reject_other_k() -> None:
    with pytest.raises(ValidationError):
        CrossoverConfig.forDimension("BLX", 2, k=3)


def test_sbx_spread_factor_fixed_point() -> None:
    assert sbx_spread_factor(0.5, 20.0) == 1.0
    beta = sbx_spread_factor(np.array([0.1, 0.9]), 2.0)
    assert beta[0] < 1.0 < beta[1]


def test_sbx_identical_parents_reproduce_themselves() -> None:
    p = np.array([0.3, -1.2, 4.0])
    cfg = CrossoverConfig.forDimension("SBX", 3, p_c=1.0)
    c1, c2 = sbx_pair(p, p, cfg, RandomSource(1))
    np.testing.assert_allclose(c1, p)
    np.testing.assert_allclose(c2, p)


def test_sbx_children_keep_the_parent_midpoint() -> None:
    rng = RandomSource(4)
    p1, p2 = np.array([-1.0, 2.0]), np.array([1.5, 0.5])
    cfg = CrossoverConfig.forDimension("SBX", 2)
    for _ in range(50):
        c1, c2 = sbx_pair(p1, p2, cfg, rng)
        np.testing.assert_allclose(c1 + c2, p1 + p2)


def test_polynomial_mutation_with_zero_rate_is_identity() -> None:
    x = np.array([0.25, -4.5, 3.0])
    cfg = CrossoverConfig.forDimension("SBX", 3, p_m=0.0)
    np.testing.assert_array_equal(polynomial_mutation(x, Bounds.box(3), cfg, RandomSource(0)), x)


def test_polynomial_mutation_stays_in_bounds() -> None:
    bounds = Bounds.box(4)
    X = np.vstack([bounds.lower, bounds.upper, np.zeros(4)] * 100)
    cfg = CrossoverConfig.forDimension("SBX", 4, p_m=1.0)
    mutated = polynomial_mutation(X, bounds, cfg, RandomSource(9))
    assert mutated.shape == X.shape
    assert bounds.contains(mutated)
    assert not np.array_equal(mutated, X)


def test_blx_children_lie_in_the_extended_box() -> None:
    p1, p2 = np.array([0.0, 1.0]), np.array([2.0, 1.0])
    cfg = CrossoverConfig.forDimension("BLX", 2)
    children = blx_alpha(p1, p2, cfg, RandomSource(3), size=5000)
    assert np.all(children[:, 0] >= -1.0) and np.all(children[:, 0] <= 3.0)
    np.testing.assert_array_equal(children[:, 1], 1.0)


def test_pcx_identical_parents() -> None:
    P = np.tile([1.0, -2.0, 0.5], (4, 1))
    cfg = CrossoverConfig.forDimension("PCX", 3)
    np.testing.assert_array_equal(pcx(P, 2, cfg, RandomSource(1)), P[2])


def test_pcx_without_variance_returns_the_center() -> None:
    P = _parents(4, 3)
    cfg = CrossoverConfig.forDimension("PCX", 3, sigma_zeta_sq=0.0, sigma_eta_sq=0.0)
    children = pcx(P, 1, cfg, RandomSource(1), size=10)
    np.testing.assert_array_equal(children, np.tile(P[1], (10, 1)))


def test_pcx_children_are_centred_on_their_parent() -> None:
    P = _parents(4, 3)
    cfg = CrossoverConfig.forDimension("PCX", 3)
    children = pcx(P, 0, cfg, RandomSource(8), size=SAMPLES)
    np.testing.assert_allclose(children.mean(axis=0), P[0], atol=0.05)


def test_pcx_rejects_bad_center() -> None:
    cfg = CrossoverConfig.forDimension("PCX", 3)
    with pytest.raises(ContractViolationException):
        pcx(_parents(4, 3), 4, cfg, RandomSource(1))


def test_spx_children_lie_in_the_expanded_simplex() -> None:
    P = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    cfg = CrossoverConfig.forDimension("SPX", 2)
    g = P.mean(axis=0)
    Y = g + cfg.epsilon * (P - g)
    children = spx(P, cfg, RandomSource(6), size=2000)
    # barycentric coordinates with respect to the expanded vertices
    A = np.vstack([Y.T, np.ones(3)])
    weights = np.linalg.solve(A, np.vstack([children.T, np.ones(len(children))]))
    assert np.all(weights >= -1e-9)


def test_wrong_parent_count() -> None:
    cfg = CrossoverConfig.forDimension("SPX", 3)
    with pytest.raises(ContractViolationException):
        spx(_parents(3, 3), cfg, RandomSource(1))


@pytest.mark.parametrize("n", [2, 5, 10])
def test_spx_preserves_mean_and_covariance(n) -> None:
    P = _parents(n + 1, n)
    cfg = CrossoverConfig.forDimension("SPX", n)
    children = spx(P, cfg, RandomSource(n), size=SAMPLES)
    target = _ml_covariance(P)
    scale = math.sqrt(np.trace(target))
    assert np.linalg.norm(children.mean(axis=0) - P.mean(axis=0)) < 0.1 * scale
    assert _relative_error(np.cov(children, rowvar=False), target) < 0.1


@pytest.mark.parametrize("n", [2, 5, 10])
def test_rex_preserves_mean_and_covariance(n) -> None:
    P = _parents(n + 1, n)
    cfg = CrossoverConfig.forDimension("REX", n)
    children = rex(P, cfg, RandomSource(n), size=SAMPLES)
    target = _unbiased_covariance(P)
    scale = math.sqrt(np.trace(target))
    assert np.linalg.norm(children.mean(axis=0) - P.mean(axis=0)) < 0.1 * scale
    assert _relative_error(np.cov(children, rowvar=False), target) < 0.1


@pytest.mark.parametrize("n", [2, 5, 10])
def test_blx_does_not_preserve_covariance(n) -> None:
    P = _parents(2, n)
    cfg = CrossoverConfig.forDimension("BLX", n)
    children = blx_alpha(P[0], P[1], cfg, RandomSource(n), size=SAMPLES)
    assert _relative_error(np.cov(children, rowvar=False), _ml_covariance(P)) > 0.1


@pytest.mark.parametrize("n", [5, 10])
def test_pcx_does_not_preserve_covariance(n) -> None:
    P = _parents(n + 1, n)
    cfg = CrossoverConfig.forDimension("PCX", n)
    children = _pcx_sample(P, cfg, RandomSource(n), SAMPLES // (n + 1))
    assert _relative_error(np.cov(children, rowvar=False), _ml_covariance(P)) > 0.1


@pytest.mark.parametrize("method", ["SPX", "REX", "PCX"])
def test_rotation_invariant_operators(method) -> None:
    n = 4
    P = _parents(n + 1, n)
    Q = random_rotation(n, RandomSource(21))
    cfg = CrossoverConfig.forDimension(method, n)

    def sample(parents: np.ndarray, seed: int) -> np.ndarray:
        rng = RandomSource(seed)
        if method == "SPX":
            return spx(parents, cfg, rng, size=SAMPLES)
        if method == "REX":
            return rex(parents, cfg, rng, size=SAMPLES)
        return _pcx_sample(parents, cfg, rng, SAMPLES // (n + 1))

    rotated_children = sample(P @ Q.T, 1)
    children_rotated = sample(P, 2) @ Q.T
    assert _relative_error(
        np.cov(rotated_children, rowvar=False), np.cov(children_rotated, rowvar=False)
    ) < 0.05


def test_blx_is_not_rotation_invariant() -> None:
    cfg = CrossoverConfig.forDimension("BLX", 2)
    axis_aligned = blx_alpha(np.zeros(2), np.array([1.0, 0.0]), cfg, RandomSource(1), size=SAMPLES)
    diagonal = blx_alpha(
        np.zeros(2), np.array([1.0, 1.0]) / math.sqrt(2), cfg, RandomSource(2), size=SAMPLES
    )
    Q = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2)
    expected = Q @ np.cov(axis_aligned, rowvar=False) @ Q.T
    observed = np.cov(diagonal, rowvar=False)
    assert expected[0, 1] == pytest.approx(1 / 6, abs=0.01)
    assert observed[0, 1] == pytest.approx(0.0, abs=0.01)


@pytest.fixture
def problem():
    return make_problem(SHIPPED_PAIRS[0], 1, 3, suite_seed=0)


def _parent_population(k: int, n: int) -> Population:
    X = _parents(k, n)
    return Population(X, np.zeros((k, 2)), np.arange(k, dtype=np.int64))


@pytest.mark.parametrize("method", list(CrossoverMethod))
def test_generate_children(problem, method) -> None:
    cfg = CrossoverConfig.forDimension(method, problem.n)
    R = _parent_population(cfg.k, problem.n)
    Q = generate_children(R, 6, cfg, problem, RandomSource(5), first_eval_id=40)
    assert len(Q) == 6
    assert Q.eval_ids.tolist() == list(range(40, 46))
    assert problem.bounds.contains(Q.X)
    np.testing.assert_allclose(Q.F, problem.evaluate(Q.X))


def test_generate_children_sbx_needs_even_lambda(problem) -> None:
    cfg = CrossoverConfig.forDimension("SBX", problem.n)
    with pytest.raises(ConfigurationException):
        generate_children(_parent_population(2, problem.n), 3, cfg, problem, RandomSource(1), 0)


def test_generate_children_checks_parent_count(problem) -> None:
    cfg = CrossoverConfig.forDimension("REX", problem.n)
    with pytest.raises(ContractViolationException):
        generate_children(_parent_population(2, problem.n), 4, cfg, problem, RandomSource(1), 0)


def test_polynomial_mutation_is_symmetric_at_the_centre() -> None:
    X = np.zeros((SAMPLES, 2))
    cfg = CrossoverConfig.forDimension("SBX", 2, p_m=1.0)
    mutated = polynomial_mutation(X, Bounds.box(2), cfg, RandomSource(10))
    np.testing.assert_allclose(mutated.mean(axis=0), 0.0, atol=0.01)
    assert np.mean(mutated > 0) == pytest.approx(0.5, abs=0.01)


def test_polynomial_mutation_rate() -> None:
    X = np.full((SAMPLES // 10, 10), 1.5)
    cfg = CrossoverConfig.forDimension("SBX", 10, p_m=0.25)
    changed = polynomial_mutation(X, Bounds.box(10), cfg, RandomSource(11)) != X
    assert changed.mean() == pytest.approx(0.25, abs=0.01)


def test_polynomial_mutation_index_controls_the_spread() -> None:
    X = np.zeros((SAMPLES, 1))
    bounds = Bounds.box(1)

    def spread(eta_m: float) -> float:
        cfg = CrossoverConfig.forDimension("SBX", 1, p_m=1.0, eta_m=eta_m)
        return float(polynomial_mutation(X, bounds, cfg, RandomSource(12)).std())

    assert spread(5.0) > spread(20.0) > spread(50.0)


def test_blx_mean_and_variance() -> None:
    p1, p2 = np.array([-1.0, 2.0, 0.0]), np.array([1.0, 2.5, 4.0])
    cfg = CrossoverConfig.forDimension("BLX", 3, alpha=0.3)
    children = blx_alpha(p1, p2, cfg, RandomSource(13), size=SAMPLES)
    np.testing.assert_allclose(children.mean(axis=0), (p1 + p2) / 2, atol=0.03)
    expected_var = ((1 + 2 * cfg.alpha) * np.abs(p1 - p2)) ** 2 / 12
    np.testing.assert_allclose(children.var(axis=0), expected_var, rtol=0.03)


@pytest.mark.parametrize("n", [2, 5])
def test_pcx_with_rotating_centre_keeps_the_parent_mean(n) -> None:
    P = _parents(n + 1, n)
    cfg = CrossoverConfig.forDimension("PCX", n)
    children = _pcx_sample(P, cfg, RandomSource(14), SAMPLES // (n + 1))
    scale = math.sqrt(np.trace(_ml_covariance(P)))
    assert np.linalg.norm(children.mean(axis=0) - P.mean(axis=0)) < 0.05 * scale


def test_spx_mean_is_the_centroid() -> None:
    P = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    cfg = CrossoverConfig.forDimension("SPX", 2, epsilon=2.0)
    children = spx(P, cfg, RandomSource(15), size=SAMPLES)
    np.testing.assert_allclose(children.mean(axis=0), [1 / 3, 1 / 3], atol=0.01)


def test_spx_covariance_scales_with_the_expansion_rate() -> None:
    n = 3
    P = _parents(n + 1, n)
    cfg = CrossoverConfig.forDimension("SPX", n, epsilon=2.0)
    children = spx(P, cfg, RandomSource(16), size=SAMPLES)
    expected = cfg.epsilon**2 / (n + 2) * _ml_covariance(P)
    assert _relative_error(np.cov(children, rowvar=False), expected) < 0.05


def test_sbx_is_not_rotation_invariant() -> None:
    cfg = CrossoverConfig.forDimension("SBX", 2, p_c=1.0)
    rng = RandomSource(17)
    # parents on a coordinate axis: children stay on the line through them
    c1, c2 = sbx_batch(np.zeros(2), np.array([1.0, 0.0]), cfg, rng, SAMPLES)
    np.testing.assert_array_equal(c1[:, 1], 0.0)
    np.testing.assert_array_equal(c2[:, 1], 0.0)

    # the same parents rotated by 45 degrees: children leave that line
    Q = np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2)
    c1, _ = sbx_batch(np.zeros(2), Q @ np.array([1.0, 0.0]), cfg, rng, SAMPLES)
    off_line = np.abs((c1 @ Q)[:, 1]) > 1e-6
    assert off_line.mean() > 0.9


def test_operator_parameters_override_the_defaults() -> None:
    assert OperatorParameters().crossoverConfig("SPX") == CrossoverConfig(method=CrossoverMethod.SPX)
    params = OperatorParameters(alpha=0.25, eta_c=5)
    assert params.overrides() == {"alpha": 0.25, "eta_c": 5.0}
    cfg = params.crossoverConfig("BLX").resolved(4)
    assert (cfg.alpha, cfg.eta_c, cfg.k) == (0.25, 5.0, 2)
    with pytest.raises(ValidationError):
        OperatorParameters(k=3)

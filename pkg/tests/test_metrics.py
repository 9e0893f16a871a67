# tests/test_metrics.py
import numpy as np
import pytest

from sparse_pr.errors import InvalidArgumentError
from sparse_pr.metrics import form_error, index_based_error, l2_error_aligned, success_rate
from sparse_pr.synthesis import synthesize_support


def test_identical_sets_have_no_error():
    X = synthesize_support(6, 2, seed=0).array
    assert l2_error_aligned(X, X) == pytest.approx(0.0, abs=1e-24)
    assert index_based_error(X - X[1], X) == 0


def test_shift_and_reflection_are_free():
    X = synthesize_support(5, 1, seed=1).array
    assert l2_error_aligned(X, -X + 3.0) == pytest.approx(0.0, abs=1e-24)
    assert index_based_error(-(X - X[2]), X) == 0


def test_hand_computed_aligned_error():
    assert l2_error_aligned([0.0, 0.5, 1.0], [0.0, 0.5, 1.1]) == pytest.approx(0.02 / 3)


def test_aligned_error_is_symmetric():
    rng = np.random.default_rng(2)
    a, b = rng.uniform(size=(7, 2)), rng.uniform(size=(7, 2))
    assert l2_error_aligned(a, b) == pytest.approx(l2_error_aligned(b, a))


@pytest.mark.parametrize("K", [4, 12])
def test_aligned_error_ignores_order(K):
    rng = np.random.default_rng(K)
    X = rng.uniform(size=(K, 1))
    E = X + rng.normal(scale=1e-3, size=X.shape)
    shuffled = E[rng.permutation(K)]
    assert l2_error_aligned(X, shuffled) == pytest.approx(l2_error_aligned(X, E))


def test_wrong_degenerate_solution_is_flagged():
    x3 = 0.2
    truth = [0.0, 1.0, x3, 1 - 2 * x3]
    estimate = [0.0, 1.0, 2 * x3, x3]
    assert index_based_error(estimate, truth) == 1
    assert l2_error_aligned(truth, estimate) > 0


def test_noisy_match_within_six_sigma():
    X = np.array([[0.0], [0.3], [0.7], [1.0]])
    sigma = 1e-3
    E = X - X[0] + np.array([[0.0], [4e-3], [-5e-3], [2e-3]])
    assert index_based_error(E, X, sigma=sigma) == 0
    E[2] -= 3e-3
    assert index_based_error(E, X, sigma=sigma) == 1


def test_tolerance_is_capped_by_point_spacing():
    X = np.array([[0.0], [0.5], [1.0]])
    far = X + np.array([[0.0], [0.3], [0.0]])
    assert index_based_error(far, X, sigma=1.0) == 1


def test_index_error_implies_small_aligned_error():
    rng = np.random.default_rng(3)
    sigma = 1e-3
    for seed in range(20):
        X = synthesize_support(5, 2, seed=seed).array
        E = X - X[0] + rng.normal(scale=sigma, size=X.shape)
        if index_based_error(E, X, sigma=sigma) == 0:
            assert l2_error_aligned(X, E) <= 5 * (6 * sigma) ** 2 * 2


def test_form_error_measures_against_the_anchor():
    X = np.array([[0.0], [0.4], [1.0]])
    E = X - X[1] + np.array([[1e-3], [0.0], [0.0]])
    assert form_error(E, X) == pytest.approx(1e-6)


def test_shape_mismatch_is_invalid():
    with pytest.raises(InvalidArgumentError):
        l2_error_aligned([0.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        index_based_error([0.0, 1.0], [[0.0, 0.0], [1.0, 1.0]])


@pytest.mark.parametrize(
    "errors,expected",
    [([0.0, 0.0, 0.0], 1.0), ([0.01, 0.05], 0.5), ([float("inf"), 0.01], 0.5), ([float("nan")], 0.0)],
)
def test_success_rate(errors, expected):
    assert success_rate(errors, 0.04) == expected


def test_success_rate_errors():
    with pytest.raises(InvalidArgumentError):
        success_rate([], 0.04)
    with pytest.raises(InvalidArgumentError):
        success_rate([0.1], 0.0)

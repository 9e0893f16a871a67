# tests/test_amplitudes.py
import math

import numpy as np
import pytest

from sparse_pr.amplitudes import assemble_weight_matrix, recover_amplitudes, symmetrize
from sparse_pr.errors import (
    AmplitudeDomainError,
    InconsistentMeasurementError,
    InvalidArgumentError,
    LabelingError,
)
from sparse_pr.models import Support, WeightMatrix
from sparse_pr.synthesis import build_acf_atoms, random_amplitudes, synthesize_support


def _weights(C, acf_zero=None):
    return WeightMatrix(entries=np.asarray(C, dtype=float).tolist(), acf_zero=acf_zero)


def test_three_amplitudes_from_products():
    C = [[0, 2, 4], [2, 0, 8], [4, 8, 0]]
    assert recover_amplitudes(_weights(C)).values == pytest.approx([1.0, 2.0, 4.0], rel=1e-12)


@pytest.mark.parametrize("K", range(3, 13))
def test_exact_recovery_from_outer_product(K):
    c = np.random.default_rng(K).uniform(0.5, 2.0, size=K)
    C = np.outer(c, c)
    np.fill_diagonal(C, 0.0)
    assert np.allclose(recover_amplitudes(_weights(C)).array, c, rtol=1e-10)


def test_two_point_fallback_uses_origin_weight():
    out = recover_amplitudes(_weights([[0, 6], [6, 0]], acf_zero=13.0)).values
    assert out == pytest.approx([3.0, 2.0])


def test_two_point_fallback_needs_origin_weight():
    with pytest.raises(InvalidArgumentError):
        recover_amplitudes(_weights([[0, 6], [6, 0]]))


def test_two_point_fallback_rejects_inconsistent_origin():
    with pytest.raises(InconsistentMeasurementError):
        recover_amplitudes(_weights([[0, 6], [6, 0]], acf_zero=10.0))


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_non_positive_weights_are_a_domain_error(bad):
    C = [[0, 2, bad], [2, 0, 8], [bad, 8, 0]]
    with pytest.raises(AmplitudeDomainError):
        recover_amplitudes(_weights(C))


def test_small_perturbations_stay_small():
    rng = np.random.default_rng(1)
    K, eps = 8, 1e-3
    c = rng.uniform(0.5, 1.5, size=K)
    E = rng.uniform(-eps, eps, size=(K, K))
    E = (E + E.T) / 2
    C = np.outer(c, c) * (1 + E)
    np.fill_diagonal(C, 0.0)
    got = recover_amplitudes(_weights(C)).array
    assert np.max(np.abs(got - c) / c) <= 10 * eps


def test_symmetrize_is_idempotent():
    C = np.random.default_rng(3).uniform(size=(5, 5))
    S = symmetrize(C)
    assert np.allclose(S, S.T)
    assert np.all(np.diag(S) == 0)
    assert np.array_equal(symmetrize(S), S)


def test_weight_matrix_from_exact_atoms(three_points):
    support, amps = three_points
    W = assemble_weight_matrix(build_acf_atoms(support, amps), support)
    assert W.acf_zero == pytest.approx(14.0)
    assert np.allclose(W.array, [[0, 2, 3], [2, 0, 6], [3, 6, 0]])
    assert recover_amplitudes(W).values == pytest.approx([1.0, 2.0, 3.0])


@pytest.mark.parametrize("seed", range(5))
def test_weight_matrix_is_outer_product_off_diagonal(seed):
    support = synthesize_support(6, 2, seed=seed)
    amps = random_amplitudes(6, "uniform", seed=seed)
    W = assemble_weight_matrix(build_acf_atoms(support, amps), support)
    expected = np.outer(amps.array, amps.array)
    np.fill_diagonal(expected, 0.0)
    assert np.allclose(W.array, expected, rtol=1e-12)


def test_shifted_labels_fail_the_tolerance(three_points):
    support, amps = three_points
    atoms = build_acf_atoms(support, amps)
    moved = Support.from_array(support.array * 1.05)
    with pytest.raises(LabelingError):
        assemble_weight_matrix(atoms, moved)
    # wide tolerance accepts the same labels
    W = assemble_weight_matrix(atoms, moved, tolerance=0.1)
    assert W.K == 3


def test_sigma_hint_scales_the_default_tolerance(three_points):
    support, amps = three_points
    atoms = build_acf_atoms(support, amps)
    moved = Support.from_array(support.array + np.array([[0.0], [0.001], [0.0]]))
    with pytest.raises(LabelingError):
        assemble_weight_matrix(atoms, moved)
    assert assemble_weight_matrix(atoms, moved, sigma_hint=0.001).K == 3


def test_fitted_location_noise_widens_the_default_tolerance(three_points):
    support, amps = three_points
    atoms = build_acf_atoms(support, amps)
    moved = Support.from_array(support.array + np.array([[0.0], [1e-5], [0.0]]))
    with pytest.raises(LabelingError):
        assemble_weight_matrix(atoms, moved)
    fitted = atoms.model_copy(update={"location_sigma": 2e-6})
    assert assemble_weight_matrix(fitted, moved).K == 3


def test_tiny_location_noise_keeps_the_floor_tolerance(three_points):
    support, amps = three_points
    atoms = build_acf_atoms(support, amps).model_copy(update={"location_sigma": 1e-12})
    nudged = Support.from_array(support.array + np.array([[0.0], [5e-7], [0.0]]))
    assert assemble_weight_matrix(atoms, nudged).K == 3


def test_atom_count_must_match_support(three_points):
    support, amps = three_points
    atoms = build_acf_atoms(support, amps)
    with pytest.raises(InvalidArgumentError):
        assemble_weight_matrix(atoms, Support.from_array([0.0, 0.2]))


def test_log_domain_handles_tiny_weights():
    c = np.array([1e-100, 1e-110, 1e-90])
    C = np.outer(c, c)
    np.fill_diagonal(C, 0.0)
    got = recover_amplitudes(_weights(C)).array
    assert np.all(np.isfinite(got))
    assert np.allclose(np.log(got), np.log(c), rtol=1e-12)
    assert math.isclose(got[2] / got[0], 1e10, rel_tol=1e-9)

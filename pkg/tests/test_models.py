# tests/test_models.py
import pytest
from pydantic import ValidationError

from sparse_pr.models import (
    AcfAtoms,
    AnnihilatingFilter,
    DifferenceSet,
    ExperimentSpec,
    FourierSamples,
    KernelDescriptor,
    RecoveryConfig,
    Support,
    WeightMatrix,
    k_from_differences,
    n_differences,
)


@pytest.mark.parametrize("K,n", [(2, 3), (3, 7), (5, 21), (12, 133)])
def test_difference_count_roundtrip(K, n):
    assert n_differences(K) == n
    assert k_from_differences(n) == K


@pytest.mark.parametrize("n", [0, 1, 2, 4, 8, 20])
def test_k_from_differences_rejects_other_sizes(n):
    assert k_from_differences(n) is None


@pytest.mark.parametrize(
    "points",
    [
        [[0.0]],
        [[0.0], [0.0]],
        [[0.0], [1.0, 2.0]],
        [[0.0], [float("nan")]],
    ],
)
def test_support_rejects_invalid_point_sets(points):
    with pytest.raises(ValidationError):
        Support(points=points)


def test_support_reports_shape():
    s = Support.from_array([0.0, 0.5, 1.0])
    assert s.K == 3
    assert s.dimension == 1
    assert s.array.shape == (3, 1)


def test_difference_set_requires_norm_order_and_size():
    DifferenceSet(diffs=[[0.0], [-1.0], [1.0]])
    with pytest.raises(ValidationError):
        DifferenceSet(diffs=[[1.0], [0.0], [-1.0]])
    with pytest.raises(ValidationError):
        DifferenceSet(diffs=[[0.0], [1.0]])


def test_difference_set_from_vectors_sorts_stably():
    d = DifferenceSet.from_vectors([[1.0], [0.0], [-1.0]])
    assert d.diffs == [[0.0], [1.0], [-1.0]]
    assert d.K == 2


def test_acf_atoms_must_be_centrally_symmetric():
    AcfAtoms(locations=[[-1.0], [0.0], [1.0]], weights=[1.0, 2.0, 1.0])
    with pytest.raises(ValidationError):
        AcfAtoms(locations=[[-1.0], [0.0], [0.9]], weights=[1.0, 2.0, 1.0])
    with pytest.raises(ValidationError):
        AcfAtoms(locations=[[-1.0], [0.0], [1.0]], weights=[1.0, 2.0, 1.5])


def test_fourier_samples_enforce_conjugate_symmetry():
    kernel = KernelDescriptor(bandwidth=10.0)
    FourierSamples(values=[(1.0, -2.0), (3.0, 0.0), (1.0, 2.0)], sampling_step=1.0, kernel=kernel)
    with pytest.raises(ValidationError):
        FourierSamples(values=[(1.0, 2.0), (3.0, 0.0), (1.0, 2.0)], sampling_step=1.0, kernel=kernel)
    with pytest.raises(ValidationError):
        FourierSamples(values=[(1.0, 0.0), (1.0, 0.0)], sampling_step=1.0, kernel=kernel)


def test_filter_leading_tap_is_one():
    AnnihilatingFilter(coeffs=[(1.0, 0.0), (0.5, 0.0)])
    with pytest.raises(ValidationError):
        AnnihilatingFilter(coeffs=[(2.0, 0.0), (0.5, 0.0)])


def test_caching_and_denoising_are_mutually_exclusive():
    with pytest.raises(ValidationError):
        RecoveryConfig(use_caching=True, denoise_partials=True)
    assert RecoveryConfig().label() == "baseline"
    assert RecoveryConfig(prune_differences=True, symmetric_cost=True).label() == "prune+symmetric"


def test_weight_matrix_must_be_square():
    with pytest.raises(ValidationError):
        WeightMatrix(entries=[[0.0, 1.0]])


def test_experiment_spec_rejects_empty_grids():
    with pytest.raises(ValidationError):
        ExperimentSpec(experiment="ablation", k_grid=[])
    with pytest.raises(ValidationError):
        ExperimentSpec(experiment="unknown")

# tests/test_synthesis.py
import math

import numpy as np
import pytest

from sparse_pr.errors import CollisionError, InvalidArgumentError
from sparse_pr.models import AcfAtoms, Amplitudes, DifferenceSet, KernelDescriptor, Support
from sparse_pr.synthesis import (
    acf_fourier_samples,
    add_difference_noise,
    add_fourier_noise,
    build_acf_atoms,
    difference_set,
    has_collision,
    random_amplitudes,
    synthesize_support,
)


def _atom_map(atoms: AcfAtoms):
    locs, w = atoms.array
    return sorted(zip(np.round(locs[:, 0], 9).tolist(), w.tolist()))


def test_synthesize_two_points_in_unit_interval():
    s = synthesize_support(2, 1, seed=7)
    x = s.array[:, 0]
    assert s.K == 2
    assert np.all((0 <= x) & (x <= 1))
    assert x[0] != x[1]


@pytest.mark.parametrize("D", [1, 2])
def test_synthesize_is_deterministic_and_collision_free(D):
    a = synthesize_support(6, D, seed=3)
    b = synthesize_support(6, D, seed=3)
    assert a == b
    assert a.array.shape == (6, D)
    assert not has_collision(a.array)


def test_synthesize_respects_per_axis_bounds():
    s = synthesize_support(8, 2, bounds=[(0.0, 1.0), (10.0, 11.0)], seed=1)
    X = s.array
    assert np.all((X[:, 0] >= 0) & (X[:, 0] <= 1))
    assert np.all((X[:, 1] >= 10) & (X[:, 1] <= 11))


@pytest.mark.parametrize("K,D", [(1, 1), (0, 1), (4, 3)])
def test_synthesize_rejects_bad_arguments(K, D):
    with pytest.raises(InvalidArgumentError):
        synthesize_support(K, D)


def test_two_point_acf():
    atoms = build_acf_atoms(Support(points=[[0.0], [1.0]]), Amplitudes(values=[1.0, 1.0]))
    assert atoms.locations == [[-1.0], [0.0], [1.0]]
    assert atoms.weights == [1.0, 2.0, 1.0]


def test_three_point_acf_weights(three_points):
    support, amps = three_points
    atoms = build_acf_atoms(support, amps)
    table = dict(_atom_map(atoms))
    assert atoms.size == 7
    assert table[0.0] == pytest.approx(14.0)
    assert table[0.3] == pytest.approx(6.0)
    assert table[-0.3] == pytest.approx(6.0)
    assert table[0.2] == pytest.approx(2.0)
    assert table[0.5] == pytest.approx(3.0)


def test_collision_is_refused():
    with pytest.raises(CollisionError):
        build_acf_atoms(Support(points=[[0.0], [1.0], [2.0]]), Amplitudes(values=[1.0, 1.0, 1.0]))


@pytest.mark.parametrize("seed", range(5))
def test_acf_is_invariant_to_shift_and_reflection(seed):
    s = synthesize_support(5, 1, seed=seed)
    amps = random_amplitudes(5, "uniform", seed=seed)
    base = _atom_map(build_acf_atoms(s, amps))
    shifted = build_acf_atoms(Support.from_array(s.array + 3.25), amps)
    mirrored = build_acf_atoms(Support.from_array(-s.array), amps)
    for other in (_atom_map(shifted), _atom_map(mirrored)):
        assert len(other) == len(base)
        for (l0, w0), (l1, w1) in zip(base, other):
            assert l1 == pytest.approx(l0, abs=1e-8)
            assert w1 == pytest.approx(w0, rel=1e-12)


def test_acf_size_and_origin_weight():
    s = synthesize_support(6, 2, seed=11)
    amps = random_amplitudes(6, "uniform", seed=11)
    atoms = build_acf_atoms(s, amps)
    locs, w = atoms.array
    assert atoms.size == 31
    origin = np.flatnonzero(np.all(locs == 0, axis=1))
    assert len(origin) == 1
    assert w[origin[0]] == pytest.approx(float(np.sum(amps.array**2)))


def test_difference_set_accepts_coincident_points():
    d = difference_set([0.0, 1.0, 0.4, 0.4])
    assert isinstance(d, DifferenceSet)
    assert d.K == 4
    assert d.diffs[0] == [0.0]


def test_origin_atom_gives_constant_samples():
    atoms = AcfAtoms(locations=[[0.0]], weights=[3.0])
    samples = acf_fourier_samples(atoms, KernelDescriptor(bandwidth=100.0), omega=1.0, M=4)
    assert samples.M == 4
    assert np.allclose(samples.array, 3.0)


def test_two_point_samples_match_closed_form():
    t, omega, M = 0.3, math.pi / 2, 8
    atoms = build_acf_atoms(Support(points=[[0.0], [t]]), Amplitudes(values=[1.0, 1.0]))
    kernel = KernelDescriptor(bandwidth=5.5 * omega)
    samples = acf_fourier_samples(atoms, kernel, omega, M)
    m = samples.indices
    expected = np.where(np.abs(m) <= 5, 2 + 2 * np.cos(m * omega * t), 0.0)
    assert np.allclose(samples.array, expected, atol=1e-12)


def test_samples_are_conjugate_symmetric(samples_for):
    atoms, samples = samples_for(synthesize_support(4, 1, seed=2).array, M=40)
    a = samples.array
    assert np.allclose(a, np.conj(a[::-1]), atol=1e-12)
    assert atoms.size == 13


def test_fourier_sampling_refuses_2d_and_short_grids():
    atoms2d = build_acf_atoms(synthesize_support(3, 2, seed=0), Amplitudes(values=[1.0] * 3))
    with pytest.raises(InvalidArgumentError):
        acf_fourier_samples(atoms2d, KernelDescriptor(bandwidth=10.0), 1.0)
    atoms1d = build_acf_atoms(synthesize_support(3, 1, seed=0), Amplitudes(values=[1.0] * 3))
    with pytest.raises(InvalidArgumentError):
        acf_fourier_samples(atoms1d, KernelDescriptor(bandwidth=10.0), 1.0, M=3)


def test_zero_difference_noise_is_identity():
    clean = difference_set(synthesize_support(5, 1, seed=0))
    noisy = add_difference_noise(clean, 0.0)
    assert noisy.diffs == clean.diffs
    assert noisy.sigma_hint == 0.0


def test_difference_noise_has_requested_variance():
    # all-zero differences: after re-sorting the values are the noise itself
    clean = DifferenceSet(diffs=[[0.0]] * 21)
    sigma = 0.05
    draws = np.concatenate(
        [add_difference_noise(clean, sigma, seed=s).array.ravel() for s in range(200)]
    )
    assert draws.var() == pytest.approx(sigma**2, rel=0.1)
    assert abs(draws.mean()) < 5 * sigma / math.sqrt(draws.size)


def test_difference_noise_output_is_norm_sorted():
    noisy = add_difference_noise(difference_set(synthesize_support(6, 2, seed=4)), 0.1, seed=9)
    norms = np.linalg.norm(noisy.array, axis=1)
    assert np.all(np.diff(norms) >= 0)
    assert noisy.sigma_hint == 0.1


def test_infinite_snr_leaves_samples_unchanged(samples_for):
    _, samples = samples_for([0.0, 0.25, 0.7])
    assert add_fourier_noise(samples, math.inf) == samples


def test_fourier_noise_hits_requested_snr(samples_for):
    _, samples = samples_for([0.0, 0.25, 0.7], M=100)
    a = samples.array
    signal = np.mean(np.abs(a) ** 2)
    noise = np.mean(
        [np.mean(np.abs(add_fourier_noise(samples, 20.0, seed=s).array - a) ** 2) for s in range(100)]
    )
    assert 10 * math.log10(signal / noise) == pytest.approx(20.0, abs=0.5)


def test_fourier_noise_keeps_conjugate_symmetry(samples_for):
    _, samples = samples_for([0.0, 0.25, 0.7])
    a = add_fourier_noise(samples, 10.0, seed=1).array
    assert np.allclose(a, np.conj(a[::-1]))
    assert a[len(a) // 2].imag == 0.0


def test_random_amplitudes_kinds():
    assert random_amplitudes(4).values == [1.0] * 4
    c = random_amplitudes(50, "uniform", seed=0).array
    assert np.all((c >= 0.5) & (c <= 1.5))
    with pytest.raises(InvalidArgumentError):
        random_amplitudes(3, "gaussian")


def test_fourier_noise_power_follows_the_passband():
    omega = math.pi
    atoms = build_acf_atoms(Support.from_array([0.0, 0.25, 0.7]), random_amplitudes(3))
    samples = acf_fourier_samples(atoms, KernelDescriptor(bandwidth=20.5 * omega), omega, M=100)
    _, band = samples.in_band()
    assert len(band) == 41
    signal = np.mean(np.abs(band) ** 2)
    noise = np.mean(
        [np.mean(np.abs(add_fourier_noise(samples, 20.0, seed=s).array - samples.array) ** 2) for s in range(100)]
    )
    assert 10 * math.log10(signal / noise) == pytest.approx(20.0, abs=0.5)

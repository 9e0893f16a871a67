# tests/conftest.py
import math

import pytest

from sparse_pr.models import Amplitudes, KernelDescriptor, Support
from sparse_pr.synthesis import acf_fourier_samples, build_acf_atoms


def make_samples(points, amps=None, omega=math.pi, M=None):
    """Noiseless ACF Fourier samples of a 1D support with an all-pass band."""
    support = Support.from_array(points)
    amps = amps or Amplitudes(values=[1.0] * support.K)
    atoms = build_acf_atoms(support, amps)
    M = M if M is not None else 2 * atoms.size
    kernel = KernelDescriptor(bandwidth=(M + 0.5) * omega)
    return atoms, acf_fourier_samples(atoms, kernel, omega, M)


@pytest.fixture
def samples_for():
    return make_samples


@pytest.fixture
def three_points():
    """{0, 0.2, 0.5} with c = (1, 2, 3)."""
    return Support(points=[[0.0], [0.2], [0.5]]), Amplitudes(values=[1.0, 2.0, 3.0])

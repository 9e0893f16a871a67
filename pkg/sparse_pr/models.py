from __future__ import annotations

import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    computed_field,
    field_validator,
    model_validator,
)

# Relative tolerance for the central symmetry of ACF atoms and Fourier samples.
SYMMETRY_RTOL = 1e-8


def _as_matrix(rows) -> np.ndarray:
    arr = np.asarray(rows, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr


def _pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    return arr[:, 0] + 1j * arr[:, 1]


def _complex_to_pairs(values) -> list[tuple[float, float]]:
    values = np.asarray(values, dtype=complex).ravel()
    return [(float(v.real), float(v.imag)) for v in values]


def n_differences(K: int) -> int:
    """Size of the difference multiset of K points, origin counted once."""
    return K * K - K + 1


def k_from_differences(n: int) -> Optional[int]:
    """Inverse of n_differences, or None when n is not of the form K²−K+1."""
    K = int(round((1 + math.sqrt(max(4 * n - 3, 0))) / 2))
    if K >= 2 and n_differences(K) == n:
        return K
    return None


class Support(BaseModel):
    points: List[List[float]]

    @field_validator("points")
    @classmethod
    def _check_points(cls, v):
        if len(v) < 2:
            raise ValueError("a support needs at least 2 points")
        if len({len(p) for p in v}) != 1 or len(v[0]) == 0:
            raise ValueError("all points must share one positive dimension")
        arr = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("support points must be finite")
        if len(np.unique(arr, axis=0)) != len(arr):
            raise ValueError("support points must be pairwise distinct")
        return v

    @computed_field
    @property
    def dimension(self) -> int:
        return len(self.points[0])

    @property
    def K(self) -> int:
        return len(self.points)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    @classmethod
    def from_array(cls, arr) -> "Support":
        return cls(points=_as_matrix(arr).tolist())


class Amplitudes(BaseModel):
    values: List[float]

    @field_validator("values")
    @classmethod
    def _check_values(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.size == 0 or not np.all(np.isfinite(arr)):
            raise ValueError("amplitudes must be a non-empty list of finite values")
        if np.any(arr <= 0):
            raise ValueError("amplitudes must be strictly positive")
        return v

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


class DifferenceSet(BaseModel):
    diffs: List[List[float]]
    sigma_hint: Optional[float] = Field(default=None, ge=0)

    @field_validator("diffs")
    @classmethod
    def _check_diffs(cls, v):
        if k_from_differences(len(v)) is None:
            raise ValueError(f"{len(v)} differences is not K²−K+1 for an integer K ≥ 2")
        if len({len(d) for d in v}) != 1 or len(v[0]) == 0:
            raise ValueError("all differences must share one positive dimension")
        norms = np.linalg.norm(np.asarray(v, dtype=float), axis=1)
        if not np.all(np.isfinite(norms)):
            raise ValueError("differences must be finite")
        if np.any(np.diff(norms) < 0):
            raise ValueError("differences must be sorted ascending by norm")
        return v

    @property
    def K(self) -> int:
        return k_from_differences(len(self.diffs))

    @property
    def dimension(self) -> int:
        return len(self.diffs[0])

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.diffs, dtype=float)

    @classmethod
    def from_vectors(cls, vectors, sigma_hint: Optional[float] = None) -> "DifferenceSet":
        arr = _as_matrix(vectors)
        order = np.argsort(np.linalg.norm(arr, axis=1), kind="stable")
        return cls(diffs=arr[order].tolist(), sigma_hint=sigma_hint)


class AcfAtoms(BaseModel):
    """Sparse ACF: difference locations with product weights c_k·c_ℓ."""

    locations: List[List[float]]
    weights: List[float]
    # standard error of the fitted locations, when the fit provides one
    location_sigma: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_symmetry(self):
        if len(self.locations) != len(self.weights) or not self.locations:
            raise ValueError("locations and weights must be non-empty and aligned")
        locs = np.asarray(self.locations, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(w))):
            raise ValueError("atoms must be finite")
        loc_tol = SYMMETRY_RTOL * max(1.0, float(np.abs(locs).max()))
        w_tol = SYMMETRY_RTOL * max(1.0, float(np.abs(w).max()))
        gap = np.linalg.norm(locs[:, None, :] + locs[None, :, :], axis=2)
        mirror = np.argmin(gap, axis=1)
        if np.any(gap[np.arange(len(locs)), mirror] > loc_tol):
            raise ValueError("ACF atoms are not centrally symmetric")
        if np.any(np.abs(w - w[mirror]) > w_tol):
            raise ValueError("mirrored ACF atoms carry different weights")
        return self

    @property
    def dimension(self) -> int:
        return len(self.locations[0])

    @property
    def size(self) -> int:
        return len(self.weights)

    @property
    def array(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.locations, dtype=float), np.asarray(self.weights, dtype=float)

    def to_difference_set(self, sigma_hint: Optional[float] = None) -> DifferenceSet:
        if sigma_hint is None:
            sigma_hint = self.location_sigma
        return DifferenceSet.from_vectors(self.locations, sigma_hint=sigma_hint)


class KernelDescriptor(BaseModel):
    kind: Literal["ideal-low-pass"] = "ideal-low-pass"
    bandwidth: float = Field(gt=0)

    def response(self, omega) -> np.ndarray:
        """|Φ(ω)|² of the ideal low-pass kernel."""
        return np.where(np.abs(np.asarray(omega, dtype=float)) < self.bandwidth, 1.0, 0.0)


class FourierSamples(BaseModel):
    """Samples A_m = A(mΩ) for m = −M…M, stored as [re, im] pairs."""

    values: List[Tuple[float, float]]
    sampling_step: float = Field(gt=0)
    kernel: KernelDescriptor

    @field_validator("values")
    @classmethod
    def _check_values(cls, v):
        if len(v) % 2 != 1:
            raise ValueError("samples must cover m = −M…M (odd count)")
        a = _pairs_to_complex(v)
        if not np.all(np.isfinite(a)):
            raise ValueError("samples must be finite")
        tol = SYMMETRY_RTOL * max(1.0, float(np.abs(a).max()))
        if np.abs(a - np.conj(a[::-1])).max() > tol:
            raise ValueError("samples violate conjugate symmetry A(−m) = conj(A(m))")
        return v

    @property
    def M(self) -> int:
        return len(self.values) // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.M, self.M + 1)

    @property
    def array(self) -> np.ndarray:
        return _pairs_to_complex(self.values)

    def in_band(self) -> Tuple[np.ndarray, np.ndarray]:
        """(m, A_m) restricted to the kernel passband."""
        m = self.indices
        keep = self.kernel.response(m * self.sampling_step) > 0
        return m[keep], self.array[keep]

    @classmethod
    def from_array(cls, values, sampling_step: float, kernel: KernelDescriptor) -> "FourierSamples":
        return cls(values=_complex_to_pairs(values), sampling_step=sampling_step, kernel=kernel)


class AnnihilatingFilter(BaseModel):
    coeffs: List[Tuple[float, float]]

    @field_validator("coeffs")
    @classmethod
    def _check_coeffs(cls, v):
        if not v:
            raise ValueError("a filter needs at least one tap")
        if abs(complex(*v[0]) - 1) > 1e-12:
            raise ValueError("leading filter tap must be normalised to 1")
        return v

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def array(self) -> np.ndarray:
        return _pairs_to_complex(self.coeffs)

    @classmethod
    def from_array(cls, coeffs) -> "AnnihilatingFilter":
        return cls(coeffs=_complex_to_pairs(coeffs))


class RootSet(BaseModel):
    roots: List[Tuple[float, float]]

    @property
    def array(self) -> np.ndarray:
        return _pairs_to_complex(self.roots)

    @classmethod
    def from_array(cls, roots) -> "RootSet":
        return cls(roots=_complex_to_pairs(roots))


class RecoveryConfig(BaseModel):
    use_caching: bool = False
    prune_differences: bool = False
    symmetric_cost: bool = False
    denoise_partials: bool = False

    @model_validator(mode="after")
    def _caching_excludes_denoising(self):
        if self.use_caching and self.denoise_partials:
            raise ValueError("caching is not compatible with denoising of partial solutions")
        return self

    def label(self) -> str:
        parts = [
            name
            for name, on in (
                ("cache", self.use_caching),
                ("prune", self.prune_differences),
                ("symmetric", self.symmetric_cost),
                ("denoise", self.denoise_partials),
            )
            if on
        ]
        return "+".join(parts) or "baseline"


class PartialSolution(BaseModel):
    """In-progress greedy state: points, candidate indices into D̃, pair labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    points: np.ndarray
    candidates: np.ndarray = Field(default_factory=lambda: np.zeros(0, dtype=int))
    labels: Optional[np.ndarray] = None

    @field_validator("points")
    @classmethod
    def _points_2d(cls, v):
        v = _as_matrix(v)
        if len(v) == 0:
            raise ValueError("a partial solution holds at least one point")
        return v


class WeightMatrix(BaseModel):
    entries: List[List[float]]
    acf_zero: Optional[float] = None

    @field_validator("entries")
    @classmethod
    def _check_entries(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise ValueError("weight matrix must be square with K ≥ 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("weight matrix entries must be finite")
        return v

    @property
    def K(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=float)


class SuccessModel(BaseModel):
    K: int = Field(ge=3)
    sigma: float = Field(ge=0)


class FlipConfig(BaseModel):
    grid_size: int = Field(default=200, ge=2)
    b: float = Field(default=1.1, gt=0)
    delta_decay: float = Field(default=0.99, gt=0, le=1)
    epoch: int = Field(default=50, ge=1)
    max_iters: int = Field(default=5000, ge=1)
    restarts: int = Field(default=10, ge=1)
    seed: int = 0
    stop_fraction: float = Field(default=0.01, ge=0)
    # Gaussian blur width of the magnitudes in grid cells; 0 disables it
    blur: float = Field(default=1.0, ge=0)


class Reconstruction(BaseModel):
    atoms: Optional[AcfAtoms] = None
    support: Optional[Support] = None
    amplitudes: Optional[Amplitudes] = None
    flags: dict = Field(default_factory=dict)


ExperimentId = Literal["phase-transition", "ablation", "star", "caching", "cf-comparison"]


class ExperimentSpec(BaseModel):
    experiment: ExperimentId
    k_grid: List[int] = Field(default_factory=lambda: [5])
    # σ values, or SNR values in dB for the Charge Flipping comparison.
    noise_grid: List[float] = Field(default_factory=lambda: [0.0])
    trials: int = Field(default=200, ge=1)
    seed: int = 0
    dimension: int = Field(default=1, ge=1, le=2)
    # phase-transition only: run every listed dimension
    dimensions: Optional[List[int]] = None
    recovery: RecoveryConfig = Field(default_factory=RecoveryConfig)
    amplitudes: Literal["unit", "uniform"] = "unit"
    star_grid: int = Field(default=20, ge=2)
    repetitions: int = Field(default=20, ge=1)
    coefficients: int = Field(default=200, ge=4)
    threshold: float = Field(default=0.04, gt=0)
    flip: FlipConfig = Field(default_factory=FlipConfig)
    out: Optional[Path] = None

    @field_validator("k_grid", "noise_grid")
    @classmethod
    def _non_empty(cls, v):
        if not v:
            raise ValueError("grids must be non-empty")
        return v

    @field_validator("dimensions")
    @classmethod
    def _known_dimensions(cls, v):
        if v is not None and (not v or any(d not in (1, 2) for d in v)):
            raise ValueError("dimensions must be a non-empty list drawn from 1 and 2")
        return v


class Bundle(BaseModel):
    """Everything a CLI stage reads or writes; each stage fills what it produces."""

    support: Optional[Support] = None
    amplitudes: Optional[Amplitudes] = None
    atoms: Optional[AcfAtoms] = None
    differences: Optional[DifferenceSet] = None
    samples: Optional[FourierSamples] = None


class ResultTable(BaseModel):
    name: str
    columns: List[str]
    rows: List[list] = Field(default_factory=list)
    meta: dict = Field(default_factory=dict)
    warnings: List[str] = Field(default_factory=list)

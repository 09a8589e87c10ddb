"""Box domains with homogeneous Dirichlet data and their sine-spectral calculus.

The domain is the open box (0, L)^N for N in {1, 2}, discretized by the
uniform interior grid x_i = i*h with h = L/(M+1), i = 1..M per axis.  Fields
store interior values only; the boundary value 0 is implicit.  The discrete
sine basis phi_k(x) = prod_d sin(k_d pi x_d / L) diagonalizes the Dirichlet
Laplacian on this grid, so transforms to and from coefficient space are
DST-I calls.

Conventions used throughout:

* forward transform   uhat = dstn(u, type=1) / (M+1)^N
* inverse transform   u    = dstn(uhat, type=1) / 2^N
* Parseval            ||u||_2^2 = (L/2)^N * sum_k uhat_k^2
* gradient seminorm   ||grad u||^2 = (L/2)^N * sum_k mu_k uhat_k^2

where mu_k are the Laplacian eigenvalues.  Two eigenvalue conventions are
supported: "continuum" uses (k pi / L)^2 per axis (the default, so spectral
quantities converge to their continuum counterparts as M grows), "discrete"
uses the second-difference values (4/h^2) sin^2(k pi h / (2L)).
"""

from __future__ import annotations

import dataclasses
from typing import Iterable

import numpy as np
import scipy.fft


_CONVENTIONS = ("continuum", "discrete")


@dataclasses.dataclass(frozen=True)
class DomainSpec:
    """Uniform interior grid on the box (0, side_length)^dimension."""

    dimension: int
    side_length: float
    points_per_axis: int
    eigenvalue_convention: str = "continuum"

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if not (np.isfinite(self.side_length) and self.side_length > 0):
            raise ValueError(f"side_length must be positive, got {self.side_length}")
        if self.points_per_axis < 8:
            raise ValueError(f"points_per_axis must be >= 8, got {self.points_per_axis}")
        if self.eigenvalue_convention not in _CONVENTIONS:
            raise ValueError(
                f"eigenvalue_convention must be one of {_CONVENTIONS}, "
                f"got {self.eigenvalue_convention!r}"
            )

    @property
    def h(self) -> float:
        """Grid spacing L/(M+1)."""
        return self.side_length / (self.points_per_axis + 1)

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dimension

    @property
    def cell_volume(self) -> float:
        """Quadrature weight h^N of the interior rectangle rule."""
        return self.h ** self.dimension

    @property
    def coefficient_weight(self) -> float:
        """Parseval weight (L/2)^N relating coefficients to L2 mass."""
        return (self.side_length / 2.0) ** self.dimension

    def axis(self) -> np.ndarray:
        """Interior grid coordinates along one axis."""
        return self.h * np.arange(1, self.points_per_axis + 1)

    def meshgrid(self):
        """Coordinate arrays of shape self.shape (ij indexing)."""
        return np.meshgrid(*([self.axis()] * self.dimension), indexing="ij")


def laplacian_eigenvalues(dom: DomainSpec) -> np.ndarray:
    """Eigenvalues mu_k of the Dirichlet Laplacian, shaped like a field.

    Entry (k_1, .., k_N) (1-based wave numbers) holds the eigenvalue of the
    sine mode with those wave numbers, under the domain's convention.
    """
    k = np.arange(1, dom.points_per_axis + 1)
    if dom.eigenvalue_convention == "continuum":
        per_axis = (k * np.pi / dom.side_length) ** 2
    else:
        h = dom.h
        per_axis = (4.0 / h**2) * np.sin(k * np.pi * h / (2.0 * dom.side_length)) ** 2
    if dom.dimension == 1:
        return per_axis
    return per_axis[:, None] + per_axis[None, :]


def _check_values(dom: DomainSpec, values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size == dom.size:
        arr = arr.reshape(dom.shape)
    if arr.shape != dom.shape:
        raise ValueError(f"values of shape {arr.shape} do not fit grid shape {dom.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("field values must all be finite")
    return arr


@dataclasses.dataclass(frozen=True)
class Field:
    """Real-valued grid function on the interior points of a domain."""

    domain: DomainSpec
    values: np.ndarray

    def __post_init__(self):
        arr = _check_values(self.domain, self.values)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @staticmethod
    def zeros(dom: DomainSpec) -> "Field":
        return Field(dom, np.zeros(dom.shape))

    @staticmethod
    def from_modes(dom: DomainSpec, modes: dict) -> "Field":
        """Field with prescribed sine coefficients {wave_number: amplitude}.

        Wave numbers are ints in 1-D and (k1, k2) pairs in 2-D.
        """
        coeff = np.zeros(dom.shape)
        for k, amp in modes.items():
            idx = (k,) if np.isscalar(k) else tuple(k)
            if len(idx) != dom.dimension:
                raise ValueError(f"mode index {k} does not match dimension {dom.dimension}")
            if not all(1 <= j <= dom.points_per_axis for j in idx):
                raise ValueError(f"mode index {k} outside 1..{dom.points_per_axis}")
            coeff[tuple(j - 1 for j in idx)] = amp
        return transform_inverse(SpectralField(dom, coeff))


@dataclasses.dataclass(frozen=True)
class SpectralField:
    """Sine coefficients of a field, indexed by wave number - 1 per axis."""

    domain: DomainSpec
    coefficients: np.ndarray

    def __post_init__(self):
        arr = _check_values(self.domain, self.coefficients)
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coefficients", arr)


# raw-array kernels shared with the integrators; trailing axes are the grid
def dst_forward(dom: DomainSpec, values: np.ndarray) -> np.ndarray:
    axes = tuple(range(-dom.dimension, 0))
    scale = 1.0 / (dom.points_per_axis + 1) ** dom.dimension
    return scipy.fft.dstn(values, type=1, axes=axes) * scale


def dst_inverse(dom: DomainSpec, coefficients: np.ndarray) -> np.ndarray:
    axes = tuple(range(-dom.dimension, 0))
    return scipy.fft.dstn(coefficients, type=1, axes=axes) * (0.5 ** dom.dimension)


def lebesgue_norm_values(dom: DomainSpec, values: np.ndarray, gamma: float) -> np.ndarray:
    """||.||_gamma of raw values over the trailing grid axes (batched)."""
    if not (np.isfinite(gamma) and gamma >= 1.0):
        raise ValueError(f"gamma must be a finite real >= 1, got {gamma}")
    axes = tuple(range(-dom.dimension, 0))
    power = np.abs(values) ** gamma
    return (dom.cell_volume * power.sum(axis=axes)) ** (1.0 / gamma)


def h1_seminorm_values(dom: DomainSpec, values: np.ndarray) -> np.ndarray:
    mu = laplacian_eigenvalues(dom)
    coeff = dst_forward(dom, values)
    axes = tuple(range(-dom.dimension, 0))
    return np.sqrt(dom.coefficient_weight * (mu * coeff**2).sum(axis=axes))


def lebesgue_norm(f: Field, gamma: float) -> float:
    """Grid Lebesgue norm (h^N sum |f_i|^gamma)^(1/gamma), gamma >= 1."""
    return float(lebesgue_norm_values(f.domain, f.values, gamma))


def h1_seminorm(f: Field) -> float:
    """Dirichlet gradient seminorm computed spectrally.

    ||grad f||^2 = (L/2)^N sum_k mu_k fhat_k^2, exact for the sine basis
    under the domain's eigenvalue convention.
    """
    return float(h1_seminorm_values(f.domain, f.values))


def transform_forward(f: Field) -> SpectralField:
    return SpectralField(f.domain, dst_forward(f.domain, f.values))


def transform_inverse(c: SpectralField) -> Field:
    return Field(c.domain, dst_inverse(c.domain, c.coefficients))

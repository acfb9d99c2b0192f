"""Fourier representation of real fields on the periodic box [-L, L)^n.

Coefficients are normalized so they approximate the continuous Fourier
transform ``u_hat(xi) = int u(x) exp(-i x.xi) dx`` by a Riemann sum, which
is what makes the Fourier-Besov norms computed elsewhere converge under grid
refinement.  Arrays are stored in standard FFT order; the last ``n`` axes of
any coefficient array are the frequency axes, so leading axes can be used to
batch whole trajectories through the same operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "RealField",
    "SpectralField",
    "HermitianSymmetryError",
    "forward_transform",
    "inverse_transform",
    "apply_multiplier",
    "fractional_laplacian",
    "gradient",
    "divergence",
    "dealias",
    "multiply",
]


class HermitianSymmetryError(ValueError):
    """Coefficients do not describe a real-valued field."""


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid on [-L, L)^n with N points per axis."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension n must be 1, 2 or 3, got {self.n}")
        if self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even and >= 8, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def dxi(self) -> float:
        return np.pi / self.L

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.n, 0))

    @cached_property
    def k(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers per axis, broadcast to the full lattice."""
        k1 = np.fft.fftfreq(self.N, 1.0 / self.N).astype(np.int64)
        return tuple(np.meshgrid(*([k1] * self.n), indexing="ij"))

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        return tuple(self.dxi * ki for ki in self.k)

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(sum(x * x for x in self.xi))

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        x1 = -self.L + self.dx * np.arange(self.N)
        return tuple(np.meshgrid(*([x1] * self.n), indexing="ij"))

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(i xi L) for a grid starting at -L; equals (-1)^(k_1 + ... + k_n)
        return np.where(sum(self.k) % 2 == 0, 1.0, -1.0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # keep |k_i| < N/3 on every axis: products of two retained modes then
        # alias only onto discarded modes
        keep = np.ones(self.shape, dtype=bool)
        for ki in self.k:
            keep &= 3 * np.abs(ki) < self.N
        return keep

    @cached_property
    def nyquist_mask(self) -> tuple[np.ndarray, ...]:
        """Per-axis boolean masks selecting the k_i = -N/2 planes."""
        return tuple(ki == -self.N // 2 for ki in self.k)

    @property
    def volume_element(self) -> float:
        return self.dxi ** self.n

    @property
    def box_volume(self) -> float:
        return (2.0 * self.L) ** self.n


@dataclass(frozen=True, eq=False)
class RealField:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[-self.grid.n:] != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("real field contains non-finite values")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Continuous-FT-normalized coefficients on the frequency lattice."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape[-self.grid.n:] != self.grid.shape:
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match grid {self.grid.shape}"
            )

    def __add__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: SpectralField) -> SpectralField:
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c) -> SpectralField:
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__

    @property
    def mean_mode(self) -> complex:
        return complex(self.coeffs[(0,) * self.grid.n])

    @classmethod
    def zeros(cls, grid: GridSpec) -> SpectralField:
        return cls(grid, np.zeros(grid.shape, dtype=complex))


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


def fft_forward(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Array-level forward transform over the last ``n`` axes."""
    return np.fft.fftn(values, axes=grid.axes) * (grid._phase * grid.dx ** grid.n)


def fft_inverse(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    """Array-level inverse transform; returns the real part without checks."""
    spatial = np.fft.ifftn(coeffs * (grid._phase / grid.dx ** grid.n), axes=grid.axes)
    return spatial.real


def hermitian_defect(grid: GridSpec, coeffs: np.ndarray) -> float:
    """max |c(-k) - conj(c(k))| relative to max |c|."""
    flipped = np.conj(coeffs)
    for ax in grid.axes:
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coeffs - flipped)) / scale)


def forward_transform(u: RealField) -> SpectralField:
    return SpectralField(u.grid, fft_forward(u.grid, u.values))


def inverse_transform(U: SpectralField, tol: float = 1e-10) -> RealField:
    defect = hermitian_defect(U.grid, U.coeffs)
    if defect > tol:
        raise HermitianSymmetryError(
            f"coefficients violate Hermitian symmetry (relative defect {defect:.3e})"
        )
    return RealField(U.grid, fft_inverse(U.grid, U.coeffs))


def apply_multiplier(U: SpectralField, symbol: np.ndarray) -> SpectralField:
    return SpectralField(U.grid, U.coeffs * symbol)


def fractional_laplacian_symbol(grid: GridSpec, alpha: float) -> np.ndarray:
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    sym = grid.xi_norm ** alpha
    sym[(0,) * grid.n] = 0.0
    return sym


def fractional_laplacian(U: SpectralField, alpha: float) -> SpectralField:
    """Multiply by |xi|^alpha (the zero mode maps to zero)."""
    return apply_multiplier(U, fractional_laplacian_symbol(U.grid, alpha))


def derivative_symbols(grid: GridSpec) -> tuple[np.ndarray, ...]:
    """i*xi_j per axis with the Nyquist plane of that axis zeroed."""
    out = []
    for xi_i, nyq in zip(grid.xi, grid.nyquist_mask):
        out.append(np.where(nyq, 0.0, 1j * xi_i))
    return tuple(out)


def gradient(U: SpectralField) -> tuple[SpectralField, ...]:
    return tuple(apply_multiplier(U, d) for d in derivative_symbols(U.grid))


def divergence(V) -> SpectralField:
    V = tuple(V)
    grid = V[0].grid
    if len(V) != grid.n:
        raise ValueError(f"divergence needs {grid.n} components, got {len(V)}")
    for Vi in V[1:]:
        _check_same_grid(V[0], Vi)
    syms = derivative_symbols(grid)
    coeffs = sum(s * Vi.coeffs for s, Vi in zip(syms, V))
    return SpectralField(grid, coeffs)


def dealias(U: SpectralField) -> SpectralField:
    """Two-thirds rule: zero every mode with some |k_i| >= N/3."""
    return SpectralField(U.grid, np.where(U.grid.dealias_mask, U.coeffs, 0.0))


def multiply_arrays(grid: GridSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    prod = fft_forward(grid, fft_inverse(grid, a) * fft_inverse(grid, b))
    return np.where(grid.dealias_mask, prod, 0.0)


def multiply(U: SpectralField, V: SpectralField) -> SpectralField:
    """Dealiased pseudo-spectral product.

    Exact (the truncated convolution of the two coefficient sets) when both
    inputs are already dealiased.
    """
    _check_same_grid(U, V)
    return SpectralField(U.grid, multiply_arrays(U.grid, U.coeffs, V.coeffs))


def l2_norm(U: SpectralField) -> float:
    """L^2 norm of the real field via Parseval on the torus."""
    return float(np.sqrt(np.sum(np.abs(U.coeffs) ** 2) / U.grid.box_volume))

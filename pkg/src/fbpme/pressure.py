"""Pressure operators P as Fourier multipliers and the order-sigma check.

Supported kinds:

``riesz``       P = Lambda^(-2s), 0 < s <= 1; sigma = 1 - 2s.
``identity``    P = Id; sigma = 1.
``exp_kernel``  P = K * u with K = sign * exp(-|x|); sigma = 0.
                sign = +1 is the kernel as written, sign = -1 the attractive
                (aggregation) potential -exp(-|x|).
``custom``      a tabulated real, even symbol with a user-declared sigma.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .littlewood_paley import DyadicPartition
from .norms import lp_norm
from .spectral import GridSpec, SpectralField, derivative_symbols, gradient, hermitian_defect

__all__ = [
    "PressureSpec",
    "pressure_symbol",
    "pressure_gradient",
    "exp_kernel_constant",
    "SigmaFit",
    "fit_block_ratios",
    "estimate_sigma",
    "load_symbol_csv",
]

KINDS = ("riesz", "identity", "exp_kernel", "custom")


@dataclass(frozen=True, eq=False)
class PressureSpec:
    kind: str
    s: float | None = None
    sign: float = 1.0
    symbol: np.ndarray | None = field(default=None, repr=False)
    custom_sigma: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown pressure kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "riesz":
            if self.s is None or not (0.0 < self.s <= 1.0):
                raise ValueError(f"riesz pressure needs 0 < s <= 1, got s={self.s}")
        if self.kind == "exp_kernel" and self.sign not in (1.0, -1.0):
            raise ValueError(f"exp_kernel sign must be +1 or -1, got {self.sign}")
        if self.kind == "custom":
            if self.symbol is None or self.custom_sigma is None:
                raise ValueError("custom pressure needs a symbol table and a declared sigma")
            if not np.all(np.isfinite(self.symbol)):
                raise ValueError("custom symbol must be finite on the lattice")

    @property
    def sigma(self) -> float:
        if self.kind == "riesz":
            return 1.0 - 2.0 * self.s
        if self.kind == "identity":
            return 1.0
        if self.kind == "exp_kernel":
            return 0.0
        return float(self.custom_sigma)

    @classmethod
    def riesz(cls, s: float) -> PressureSpec:
        return cls("riesz", s=s)

    @classmethod
    def identity(cls) -> PressureSpec:
        return cls("identity")

    @classmethod
    def exp_kernel(cls, sign: float = 1.0) -> PressureSpec:
        return cls("exp_kernel", sign=sign)


def exp_kernel_constant(n: int) -> float:
    """L^1 mass of exp(-|x|) on R^n, which is the symbol's value at 0."""
    # |S^{n-1}| * Gamma(n)
    sphere = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)
    return sphere * math.gamma(n)


def pressure_symbol(spec: PressureSpec, grid: GridSpec) -> np.ndarray:
    r = grid.xi_norm
    origin = (0,) * grid.n
    if spec.kind == "riesz":
        m = np.zeros(grid.shape)
        nz = r > 0
        m[nz] = r[nz] ** (-2.0 * spec.s)
        return m
    if spec.kind == "identity":
        return np.ones(grid.shape)
    if spec.kind == "exp_kernel":
        c = exp_kernel_constant(grid.n)
        return spec.sign * c * (1.0 + r * r) ** (-(grid.n + 1) / 2.0)
    m = np.asarray(spec.symbol, dtype=float)
    if m.shape != grid.shape:
        raise ValueError(f"custom symbol shape {m.shape} does not match grid {grid.shape}")
    if not np.isfinite(m[origin]):
        raise ValueError("custom symbol must have a finite value at xi = 0")
    return m


def pressure_gradient(U: SpectralField, spec: PressureSpec) -> tuple[SpectralField, ...]:
    """Components i*xi_i*m(xi)*u_hat(xi) of grad(Pu)."""
    m = pressure_symbol(spec, U.grid)
    return gradient(SpectralField(U.grid, U.coeffs * m))


def load_symbol_csv(path, grid: GridSpec) -> np.ndarray:
    """Read a tabulated symbol: columns k1[, k2, k3], m (integer lattice indices).

    Every lattice point must be present exactly once; the table must be even
    in xi so that P maps real fields to real fields.
    """
    path = Path(path)
    m = np.full(grid.shape, np.nan)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        kcols = [f"k{i + 1}" for i in range(grid.n)]
        missing = [c for c in (*kcols, "m") if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                ks = [int(row[c]) for c in kcols]
                val = float(row["m"])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad row {row}") from exc
            if any(not -grid.N // 2 <= k < grid.N // 2 for k in ks):
                raise ValueError(f"{path}:{lineno}: index {ks} outside the lattice")
            idx = tuple(k % grid.N for k in ks)
            if not np.isnan(m[idx]):
                raise ValueError(f"{path}:{lineno}: duplicate entry for {ks}")
            m[idx] = val
    if np.any(np.isnan(m)):
        raise ValueError(f"{path}: {int(np.sum(np.isnan(m)))} lattice points have no value")
    if hermitian_defect(grid, m.astype(complex)) > 1e-12:
        raise ValueError(f"{path}: symbol is not even in xi")
    return m


@dataclass(frozen=True)
class SigmaFit:
    """Least-squares fit of log2(block ratio) against the block index."""

    sigma: float  # slope over the high half of the resolved blocks
    low_sigma: float  # slope over the low half, reported separately
    js: tuple
    ratios: tuple
    constant: float  # max_k ratio_k * 2^(-k sigma_declared)


def _probe_ratios(spec: PressureSpec, P: DyadicPartition, p: float) -> np.ndarray:
    grid = P.grid
    m = pressure_symbol(spec, grid)
    grad_mag = np.sqrt(sum(np.abs(d) ** 2 for d in derivative_symbols(grid))) * np.abs(m)
    ratios = []
    for j in P.js:
        probe = P.masks[j] / lp_norm(P.masks[j], p, grid.volume_element, grid.axes)
        localized = probe * P.masks[j]
        num = lp_norm(grad_mag * localized, p, grid.volume_element, grid.axes)
        den = lp_norm(localized, p, grid.volume_element, grid.axes)
        ratios.append(num / den)
    return np.array(ratios)


def _slope(js, ratios) -> float:
    js = np.asarray(js, dtype=float)
    y = np.log2(ratios)
    ok = np.isfinite(y)
    if np.count_nonzero(ok) < 2:
        raise ValueError("degenerate sigma fit: fewer than two usable blocks")
    slope, _ = np.polyfit(js[ok], y[ok], 1)
    return float(slope)


def fit_block_ratios(spec: PressureSpec, grid: GridSpec, P: DyadicPartition, p: float = 2.0) -> SigmaFit:
    if P.grid != grid:
        raise ValueError("partition was built for a different grid")
    if P.num_blocks < 4:
        raise ValueError(f"sigma estimation needs >= 4 resolved blocks, have {P.num_blocks}")
    js = np.array(list(P.js))
    ratios = _probe_ratios(spec, P, p)
    half = len(js) // 2
    high = slice(len(js) - max(half, 2), None)
    low = slice(0, max(half, 2))
    const = float(np.max(ratios * 2.0 ** (-js * spec.sigma)))
    return SigmaFit(
        sigma=_slope(js[high], ratios[high]),
        low_sigma=_slope(js[low], ratios[low]),
        js=tuple(int(j) for j in js),
        ratios=tuple(float(x) for x in ratios),
        constant=const,
    )


def estimate_sigma(spec: PressureSpec, grid: GridSpec, P: DyadicPartition, p: float = 2.0) -> float:
    """High-frequency slope of log2 ||Delta_k grad P u|| / ||Delta_k u|| in k."""
    return fit_block_ratios(spec, grid, P, p).sigma

"""Fourier-Besov norms and their mixed time-space versions.

Block norms ``||phi_j u_hat||_{L^p}`` are Riemann sums on the frequency
lattice (max over the lattice for p = inf); the outer l^q sum runs over the
resolved blocks only.  Time integrals use the trapezoidal rule on whatever
time stamps a trajectory carries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .littlewood_paley import DyadicPartition
from .spectral import SpectralField

__all__ = [
    "FBNormParams",
    "block_norms",
    "fb_from_blocks",
    "fb_norm",
    "TrajectoryRecord",
    "time_norm",
    "mixed_norm",
    "MixedNorms",
    "QuadratureError",
]

INF = math.inf


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class FBNormParams:
    beta: float
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError(f"p and q must be >= 1 (got p={self.p}, q={self.q})")

    def with_beta(self, beta: float) -> FBNormParams:
        return FBNormParams(beta, self.p, self.q)

    @property
    def label(self) -> str:
        return f"fb_norm[beta={self.beta:.17g};p={_fmt_exp(self.p)};q={_fmt_exp(self.q)}]"


def _fmt_exp(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.17g}"


def lp_norm(values: np.ndarray, p: float, weight: float, axes) -> np.ndarray:
    """Weighted discrete L^p norm over ``axes`` (weight = cell volume)."""
    a = np.abs(values)
    if math.isinf(p):
        return np.max(a, axis=axes)
    if p == 1:
        return np.sum(a, axis=axes) * weight
    if p == 2:
        return np.sqrt(np.sum(a * a, axis=axes) * weight)
    return (np.sum(a**p, axis=axes) * weight) ** (1.0 / p)


def block_norms(coeffs: np.ndarray, P: DyadicPartition, p: float) -> np.ndarray:
    """||phi_j c||_{L^p} for every resolved j.

    ``coeffs`` may carry leading batch axes; the result has shape
    ``batch + (num_blocks,)``.
    """
    grid = P.grid
    out = []
    for j in P.js:
        out.append(lp_norm(coeffs * P.masks[j], p, grid.volume_element, grid.axes))
    return np.stack(out, axis=-1)


def lq_sum(x: np.ndarray, q: float) -> np.ndarray:
    x = np.abs(x)
    if math.isinf(q):
        return np.max(x, axis=-1)
    if q == 1:
        return np.sum(x, axis=-1)
    return np.sum(x**q, axis=-1) ** (1.0 / q)


def dyadic_weights(P: DyadicPartition, beta: float) -> np.ndarray:
    return np.array([2.0 ** (j * beta) for j in P.js])


def fb_from_blocks(blocks: np.ndarray, js, beta: float, q: float) -> np.ndarray:
    """l^q over j of 2^(j beta) * blocks[..., j]."""
    w = np.array([2.0 ** (j * beta) for j in js])
    return lq_sum(blocks * w, q)


def fb_norm(U: SpectralField, params: FBNormParams, P: DyadicPartition) -> float:
    """Homogeneous Fourier-Besov norm of a single field."""
    b = block_norms(U.coeffs, P, params.p)
    return float(fb_from_blocks(b, P.js, params.beta, params.q))


def time_norm(values: np.ndarray, times: np.ndarray, r: float) -> np.ndarray:
    """L^r over time along axis 0 (trapezoidal rule; sup for r = inf)."""
    values = np.abs(np.asarray(values, dtype=float))
    if math.isinf(r):
        return np.max(values, axis=0)
    if len(times) < 2:
        raise QuadratureError("time quadrature with r < inf needs at least two samples")
    if r == 1:
        return np.trapezoid(values, times, axis=0)
    return np.trapezoid(values**r, times, axis=0) ** (1.0 / r)


@dataclass
class TrajectoryRecord:
    """Per-time block norms plus the scalar series tracked during a run."""

    times: np.ndarray
    js: tuple
    p: float
    block_norms: np.ndarray
    fb_norms: dict = field(default_factory=dict)
    blowup_integral: np.ndarray | None = None
    mean_mode: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.block_norms = np.asarray(self.block_norms, dtype=float)
        self.js = tuple(int(j) for j in self.js)
        if self.block_norms.shape != (len(self.times), len(self.js)):
            raise ValueError(
                f"block_norms shape {self.block_norms.shape} != "
                f"({len(self.times)}, {len(self.js)})"
            )
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    @classmethod
    def from_coeffs(cls, times, coeffs: np.ndarray, P: DyadicPartition, p: float) -> TrajectoryRecord:
        """Build a record from stacked coefficients of shape (T,) + grid.shape."""
        return cls(np.asarray(times), tuple(P.js), p, block_norms(coeffs, P, p))

    @classmethod
    def from_fields(cls, times, fields, P: DyadicPartition, p: float) -> TrajectoryRecord:
        return cls.from_coeffs(times, np.stack([f.coeffs for f in fields]), P, p)

    def fb_series(self, params: FBNormParams) -> np.ndarray:
        self._check_p(params)
        return fb_from_blocks(self.block_norms, self.js, params.beta, params.q)

    def _check_p(self, params: FBNormParams):
        if params.p != self.p:
            raise ValueError(
                f"record holds block norms for p={self.p}; cannot evaluate p={params.p}"
            )

    def window(self, t0: float, t1: float) -> TrajectoryRecord:
        sel = (self.times >= t0) & (self.times <= t1)
        return TrajectoryRecord(self.times[sel], self.js, self.p, self.block_norms[sel])


@dataclass(frozen=True)
class MixedNorms:
    tilde: float  # time norm inside the block sum
    plain: float  # time norm outside


def mixed_norm(rec: TrajectoryRecord, r: float, params: FBNormParams) -> MixedNorms:
    """Both L~^r(I; FB^beta_{p,q}) and L^r(I; FB^beta_{p,q}) on rec.times."""
    if len(rec.times) == 0:
        raise QuadratureError("empty trajectory")
    rec._check_p(params)
    per_block = time_norm(rec.block_norms, rec.times, r)
    tilde = float(fb_from_blocks(per_block, rec.js, params.beta, params.q))
    plain = float(time_norm(rec.fb_series(params), rec.times, r))
    return MixedNorms(tilde, plain)

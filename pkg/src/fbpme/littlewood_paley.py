"""Dyadic partition of unity on the frequency lattice and Bony paraproducts.

The profile follows the usual construction: a radial cutoff ``chi`` equal
to 1 on |xi| <= 3/4 and 0 on |xi| >= 4/3 (C-infinity transition in
between), and ``phi(xi) = chi(xi/2) - chi(xi)``.  Then
supp phi = [3/4, 8/3], phi = 1 on [4/3, 3/2], and the dyadic sum telescopes.

Only the blocks j_min..j_max that fit inside the lattice are "resolved".
Everything below them (including the mean) is lumped into a low residue
``chi(2^-j_min xi)`` and everything above into a high residue
``1 - chi(2^-(j_max+1) xi)``, so that together they form an exact finite
partition of unity.  Norms only ever see resolved blocks; the residues are
used by the paraproduct and by the tail-mass diagnostic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .spectral import GridSpec, SpectralField, multiply_arrays

__all__ = [
    "smooth_step",
    "cutoff",
    "profile",
    "DyadicPartition",
    "PartitionError",
    "build_partition",
    "block",
    "lowpass",
    "tail_mass",
    "paraproduct",
]

logger = logging.getLogger(__name__)

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0


class PartitionError(ValueError):
    """The grid cannot host enough dyadic blocks."""


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    out = np.where(t >= 1.0, 1.0, 0.0)
    mid = (t > 0.0) & (t < 1.0)
    if np.any(mid):
        tm = t[mid]
        a = np.exp(-1.0 / tm)
        b = np.exp(-1.0 / (1.0 - tm))
        out[mid] = a / (a + b)
    return out


def cutoff(r):
    """Radial cutoff chi: 1 on [0, 3/4], 0 on [4/3, inf)."""
    r = np.asarray(r, dtype=float)
    return smooth_step((CHI_OUTER - r) / (CHI_OUTER - CHI_INNER))


def profile(r):
    """The dyadic bump phi(r) = chi(r/2) - chi(r)."""
    return cutoff(np.asarray(r, dtype=float) / 2.0) - cutoff(r)


def resolved_range(grid: GridSpec) -> tuple[int, int]:
    # 2^j_min >= (4/3) dxi and (8/3) 2^j_max <= dxi N / 2
    j_min = math.ceil(math.log2(4.0 / 3.0 * grid.dxi) - 1e-12)
    j_max = math.floor(math.log2(3.0 * grid.dxi * grid.N / 16.0) + 1e-12)
    return j_min, j_max


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    grid: GridSpec
    j_min: int
    j_max: int
    masks: dict = field(repr=False)
    low_residue: np.ndarray = field(repr=False)
    high_residue: np.ndarray = field(repr=False)

    @property
    def j_range(self) -> tuple[int, int]:
        return self.j_min, self.j_max

    @property
    def js(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def num_blocks(self) -> int:
        return self.j_max - self.j_min + 1

    @cached_property
    def mask_stack(self) -> np.ndarray:
        """Resolved masks stacked along a new leading axis (j_min first)."""
        return np.stack([self.masks[j] for j in self.js])

    @cached_property
    def resolved_band(self) -> np.ndarray:
        """Lattice points where the resolved masks alone sum to one."""
        r = self.grid.xi_norm
        return (r >= CHI_OUTER * 2.0 ** self.j_min) & (r <= 1.5 * 2.0 ** self.j_max)

    def extended_block(self, j: int) -> np.ndarray:
        """Mask of block j with the residues standing in for j_min-1, j_max+1."""
        if j == self.j_min - 1:
            return self.low_residue
        if j == self.j_max + 1:
            return self.high_residue
        if self.j_min <= j <= self.j_max:
            return self.masks[j]
        return np.zeros(self.grid.shape)

    def lowpass_symbol(self, j: int) -> np.ndarray:
        """psi_j = sum of extended blocks k <= j-1.

        For j_min <= j <= j_max + 1 this is chi(2^-j xi) exactly; it is zero
        for j < j_min and identically one above j_max + 1.
        """
        if j <= self.j_min - 1:
            return np.zeros(self.grid.shape)
        if j >= self.j_max + 2:
            return np.ones(self.grid.shape)
        return cutoff(self.grid.xi_norm / 2.0 ** j)

    @property
    def profile(self):
        return profile


def build_partition(grid: GridSpec) -> DyadicPartition:
    j_min, j_max = resolved_range(grid)
    if j_max - j_min + 1 < 3:
        raise PartitionError(
            f"grid n={grid.n}, N={grid.N}, L={grid.L} resolves only blocks "
            f"[{j_min}, {j_max}]; at least 3 are required"
        )
    r = grid.xi_norm
    chis = {j: cutoff(r / 2.0 ** j) for j in range(j_min, j_max + 2)}
    masks = {j: chis[j + 1] - chis[j] for j in range(j_min, j_max + 1)}
    low = chis[j_min]
    high = 1.0 - chis[j_max + 1]
    for m in (*masks.values(), low, high):
        m.setflags(write=False)
    part = DyadicPartition(grid, j_min, j_max, masks, low, high)
    total = sum(masks.values())
    defect = np.max(np.abs(total[part.resolved_band] - 1.0), initial=0.0)
    if defect > 1e-12:
        raise PartitionError(f"partition of unity defect {defect:.3e} on the resolved band")
    return part


def block(U: SpectralField, j: int, P: DyadicPartition) -> SpectralField:
    """Delta_j u."""
    if not P.j_min <= j <= P.j_max:
        logger.warning("block %d outside resolved range [%d, %d]; returning zero", j, P.j_min, P.j_max)
        return SpectralField.zeros(U.grid)
    return SpectralField(U.grid, U.coeffs * P.masks[j])


def lowpass(U: SpectralField, j: int, P: DyadicPartition) -> SpectralField:
    """S_j u."""
    return SpectralField(U.grid, U.coeffs * P.lowpass_symbol(j))


def tail_mass(U: SpectralField, P: DyadicPartition) -> dict:
    """Share of the (mean-free) L^2 energy carried by the unresolved residues."""
    c2 = np.abs(U.coeffs) ** 2
    c2 = c2.copy()
    c2[(0,) * P.grid.n] = 0.0
    total = float(np.sum(c2))
    if total == 0.0:
        return {"low": 0.0, "high": 0.0}
    return {
        "low": float(np.sum(c2 * P.low_residue**2)) / total,
        "high": float(np.sum(c2 * P.high_residue**2)) / total,
    }


def paraproduct(u: SpectralField, v: SpectralField, P: DyadicPartition):
    """Bony decomposition uv = T_u v + T_v u + R(u, v).

    Sums run over the extended block family (residues included), so the
    three terms add up to the dealiased product for any dealiased u, v.
    """
    if u.grid != v.grid or u.grid != P.grid:
        raise ValueError("paraproduct: grid mismatch")
    grid = u.grid
    js = range(P.j_min - 1, P.j_max + 2)
    du = {j: u.coeffs * P.extended_block(j) for j in js}
    dv = {j: v.coeffs * P.extended_block(j) for j in js}
    zero = np.zeros(grid.shape, dtype=complex)

    tuv = zero.copy()
    tvu = zero.copy()
    ruv = zero.copy()
    for j in js:
        psi = P.lowpass_symbol(j - 1)
        if np.any(psi):
            tuv += multiply_arrays(grid, u.coeffs * psi, dv[j])
            tvu += multiply_arrays(grid, v.coeffs * psi, du[j])
        wide = dv[j] + dv.get(j - 1, zero) + dv.get(j + 1, zero)
        ruv += multiply_arrays(grid, du[j], wide)
    return SpectralField(grid, tuv), SpectralField(grid, tvu), SpectralField(grid, ruv)

"""Index arithmetic, smallness and local-time criteria, and the blowup monitor.

Every criterion that involves the non-explicit constant of the estimates
takes a fitted ``C_fit`` (see ``fbpme.estimates.fit_global_constant``), so
its verdicts are conditional on that constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .littlewood_paley import DyadicPartition
from .norms import FBNormParams, TrajectoryRecord, fb_norm, mixed_norm
from .solver import ModelParams
from .spectral import SpectralField

__all__ = [
    "critical_index",
    "IndexReport",
    "admissible",
    "SmallnessReport",
    "smallness_check",
    "split_frequency",
    "select_lambda",
    "TimeBound",
    "local_time_bound",
    "MonitorReport",
    "blowup_monitor",
]


def critical_index(n: int, p: float, alpha: float, sigma: float) -> float:
    """beta = n(1 - 1/p) - alpha + sigma + 1."""
    return n * (1.0 - 1.0 / p) - alpha + sigma + 1.0


def _conjugate(r: float) -> float:
    if r == 1:
        return math.inf
    if math.isinf(r):
        return 1.0
    return r / (r - 1.0)


@dataclass(frozen=True)
class IndexReport:
    beta: float
    admissible: bool  # the improved (large-r) range
    admissible_range: tuple  # (lower, upper) of the improved range
    admissible_thm31: bool  # the r = 2 range, lower bound 2 max{1, sigma+1}
    range_thm31: tuple
    admissible_r: bool  # the range for the requested finite r
    range_r: tuple
    r_used: float
    rationale: str


def admissible(n: int, p: float, alpha: float, sigma: float, r: float = math.inf) -> IndexReport:
    """Evaluate the alpha ranges r' max{1, sigma+1} < alpha < n(1-1/p) + sigma + 2.

    Three variants are reported: r = 2 (r' = 2), the requested r, and the
    limit r -> inf (r' -> 1), which is the widest.
    """
    if r <= 1:
        raise ValueError(f"r must exceed 1, got {r}")
    base = max(1.0, sigma + 1.0)
    upper = n * (1.0 - 1.0 / p) + sigma + 2.0
    wide = (base, upper)
    thm = (2.0 * base, upper)
    r_range = (_conjugate(r) * base, upper)

    def inside(rng):
        return rng[0] < alpha < rng[1]

    ok = inside(wide)
    if ok:
        why = "inside the range"
    elif alpha >= upper:
        why = f"alpha >= n(1-1/p)+sigma+2 = {upper:g}"
    elif sigma + 1.0 > 1.0:
        why = f"alpha <= sigma+1 = {base:g}"
    else:
        why = "alpha <= 1"
    return IndexReport(
        beta=critical_index(n, p, alpha, sigma),
        admissible=ok,
        admissible_range=wide,
        admissible_thm31=inside(thm),
        range_thm31=thm,
        admissible_r=inside(r_range),
        range_r=r_range,
        r_used=r,
        rationale=why,
    )


@dataclass(frozen=True)
class SmallnessReport:
    passed: bool
    norm: float
    threshold: float
    margin: float  # threshold / norm, inf for zero data

    def __bool__(self) -> bool:
        return self.passed


def smallness_check(u0: SpectralField, params: ModelParams, C_fit: float, P: DyadicPartition) -> SmallnessReport:
    """||u0||_{FB^beta} <= 1/(4 C_fit^2)."""
    if not C_fit > 0:
        raise ValueError(f"C_fit must be positive, got {C_fit}")
    norm = fb_norm(u0, params.norm_params(), P)
    threshold = 1.0 / (4.0 * C_fit**2)
    margin = math.inf if norm == 0.0 else threshold / norm
    return SmallnessReport(norm <= threshold, norm, threshold, margin)


def split_frequency(u0: SpectralField, lam: float) -> tuple[SpectralField, SpectralField]:
    """Sharp split into |xi| <= lam and |xi| > lam."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    low_mask = u0.grid.xi_norm <= lam
    low = np.where(low_mask, u0.coeffs, 0.0)
    high = np.where(low_mask, 0.0, u0.coeffs)
    return SpectralField(u0.grid, low), SpectralField(u0.grid, high)


def select_lambda(u0: SpectralField, params: ModelParams, C_fit: float, P: DyadicPartition) -> float:
    """Smallest lattice radius lam >= dxi with ||high||_{FB^beta} <= 1/(8 C_fit).

    The high-part norm is non-increasing in lam and only changes at lattice
    radii, so bisection over the sorted distinct radii is exact.
    """
    if not C_fit > 0:
        raise ValueError(f"C_fit must be positive, got {C_fit}")
    grid = u0.grid
    target = 1.0 / (8.0 * C_fit)
    radii = np.unique(grid.xi_norm)
    radii = radii[radii >= grid.dxi * (1.0 - 1e-12)]
    bp = params.norm_params()

    def ok(lam):
        return fb_norm(split_frequency(u0, lam)[1], bp, P) <= target

    lo, hi = 0, len(radii) - 1
    if not ok(radii[hi]):  # pragma: no cover - the top radius leaves high = 0
        raise RuntimeError("no admissible lambda on this lattice")
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(radii[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(radii[lo])


@dataclass(frozen=True)
class TimeBound:
    T_r2: float  # (1 / (8 C^2 lam^{alpha/2} ||u0||))^2
    T_improved: float  # min over r and r' of (1 / (16 C^2 lam^{alpha/s} ||u0||))^s
    lam: float
    r: float


def local_time_bound(u0norm: float, lam: float, alpha: float, C_fit: float, r: float = 2.0) -> TimeBound:
    if not (lam > 0 and C_fit > 0):
        raise ValueError("lambda and C_fit must be positive")
    if u0norm < 0:
        raise ValueError("norm must be nonnegative")
    if u0norm == 0.0:
        return TimeBound(math.inf, math.inf, lam, r)
    t2 = (1.0 / (8.0 * C_fit**2 * lam ** (alpha / 2.0) * u0norm)) ** 2
    candidates = []
    for s in (r, _conjugate(r)):
        if math.isinf(s):
            # the s -> inf limit of x^s is 0 for x < 1 and inf for x > 1
            base = 1.0 / (16.0 * C_fit**2 * u0norm)
            candidates.append(math.inf if base >= 1.0 else 0.0)
        else:
            candidates.append((1.0 / (16.0 * C_fit**2 * lam ** (alpha / s) * u0norm)) ** s)
    return TimeBound(t2, min(candidates), lam, r)


@dataclass(frozen=True)
class MonitorReport:
    status: str  # bounded | growing | blown
    integral: np.ndarray  # running plain L^1 integral of ||u||_{FB^{beta+alpha}}
    final: float
    tilde: float  # L~^1(FB^{beta+alpha}) over the whole record
    slopes: tuple


def _running_integral(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values, dtype=float)
    if len(times) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(times) * (values[1:] + values[:-1]))
    return out


def blowup_monitor(rec: TrajectoryRecord, params: ModelParams, solver_status: str = "ok", windows: int = 3) -> MonitorReport:
    """Track int_0^t ||u||_{FB^{beta+alpha}} and classify the run.

    ``blown`` if the solver stopped on overflow or the ceiling; ``growing``
    if the integral's mean slope increased over each of the last three
    windows; ``bounded`` otherwise.
    """
    bp = params.norm_params(params.alpha)
    series = rec.fb_series(bp)
    integral = _running_integral(rec.times, series)
    tilde = mixed_norm(rec, 1.0, bp).tilde if len(rec.times) > 1 else 0.0
    slopes: list[float] = []
    if len(rec.times) >= windows + 1:
        edges = np.linspace(0, len(rec.times) - 1, windows + 1).round().astype(int)
        for a, b in zip(edges[:-1], edges[1:]):
            dt = rec.times[b] - rec.times[a]
            slopes.append(float((integral[b] - integral[a]) / dt) if dt > 0 else 0.0)
    if solver_status == "blown":
        status = "blown"
    elif len(slopes) == windows and all(b > a for a, b in zip(slopes, slopes[1:])):
        status = "growing"
    else:
        status = "bounded"
    return MonitorReport(status, integral, float(integral[-1]) if len(integral) else 0.0, tilde, tuple(slopes))

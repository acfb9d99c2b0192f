"""Mild-solution machinery for u_t + Lambda^alpha u = div(u grad P u).

Two independent routes to the same solution:

* ``time_march`` -- ETD-RK2 (Cox-Matthews) with the linear part integrated
  exactly; the production path.
* ``picard_solve`` -- fixed-point iteration of u = S(t)u0 + H(u, u) on a
  stored time mesh, with H evaluated by the trapezoidal rule; used for
  verification.

Both keep the state in Fourier space, so the mean mode is never touched by
round-off from transforms.
"""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field

import numpy as np

from .littlewood_paley import DyadicPartition, build_partition
from .norms import FBNormParams, TrajectoryRecord, block_norms, fb_from_blocks, time_norm
from .pressure import PressureSpec, pressure_symbol
from .spectral import (
    GridSpec,
    SpectralField,
    derivative_symbols,
    fft_forward,
    fft_inverse,
    fractional_laplacian_symbol,
)

__all__ = [
    "ModelParams",
    "SolverConfig",
    "NumericalBlowup",
    "semigroup_apply",
    "nonlinear_term",
    "duhamel",
    "MarchResult",
    "time_march",
    "PicardResult",
    "picard_solve",
    "default_dt",
    "phi_functions",
]

logger = logging.getLogger(__name__)


class NumericalBlowup(FloatingPointError):
    """Non-finite values or a norm above the configured ceiling."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    pressure: PressureSpec
    n: int = 1
    p: float = 2.0
    q: float = 2.0
    nonlinear: bool = True
    nu: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def sigma(self) -> float:
        return self.pressure.sigma

    @property
    def beta(self) -> float:
        return self.n * (1.0 - 1.0 / self.p) - self.alpha + self.sigma + 1.0

    def norm_params(self, shift: float = 0.0) -> FBNormParams:
        return FBNormParams(self.beta + shift, self.p, self.q)


@dataclass(frozen=True)
class SolverConfig:
    T: float
    dt: float | None = None
    record_every: int = 1
    picard_max_iter: int = 50
    picard_tol: float = 1e-10
    picard_nodes: int = 64
    picard_r: float = 2.0
    ceiling: float = 1e8
    snapshots: tuple = ()

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.record_every < 1 or self.picard_nodes < 1:
            raise ValueError("record_every and picard_nodes must be >= 1")


def default_dt(grid: GridSpec, alpha: float) -> float:
    return 0.25 * (grid.dxi * grid.N / 3.0) ** (-alpha)


def semigroup_apply(U: SpectralField, t: float, alpha: float) -> SpectralField:
    """S(t)u = F^-1(exp(-t |xi|^alpha) u_hat)."""
    if t < 0:
        raise ValueError(f"semigroup time must be >= 0, got {t}")
    if t == 0:
        return SpectralField(U.grid, U.coeffs.copy())
    lam = fractional_laplacian_symbol(U.grid, alpha)
    return SpectralField(U.grid, U.coeffs * np.exp(-t * lam))


class _Nonlinearity:
    """Precomputed symbols for div(u grad P u) on one grid."""

    def __init__(self, grid: GridSpec, pressure: PressureSpec):
        self.grid = grid
        self.deriv = derivative_symbols(grid)
        m = pressure_symbol(pressure, grid)
        self.grad_p = tuple(d * m for d in self.deriv)

    def __call__(self, coeffs: np.ndarray) -> np.ndarray:
        return self.bilinear(coeffs, coeffs)

    def bilinear(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Coefficients of div(u grad P v) for u <-> a, v <-> b (batched)."""
        g = self.grid
        u = fft_inverse(g, a)
        out = 0.0
        for d, gp in zip(self.deriv, self.grad_p):
            flux = fft_forward(g, u * fft_inverse(g, gp * b))
            out = out + d * np.where(g.dealias_mask, flux, 0.0)
        return out


def nonlinear_term(U: SpectralField, params: ModelParams) -> SpectralField:
    """Dealiased div(u grad P u)."""
    out = _Nonlinearity(U.grid, params.pressure)(U.coeffs)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowup("non-finite values in the nonlinear term")
    return SpectralField(U.grid, out)


def duhamel_arrays(times: np.ndarray, forcing: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Composite trapezoidal Duhamel integral at every node.

    ``forcing`` has shape (len(times),) + grid shape; returns the same shape
    with H(t_0) = 0.  Written as the recursion
    H_{i+1} = E H_i + (dt/2)(E f_i + f_{i+1}), E = exp(-dt lam),
    which is algebraically the composite rule with the semigroup applied
    exactly to every node.
    """
    out = np.zeros_like(forcing)
    for i in range(len(times) - 1):
        h = times[i + 1] - times[i]
        E = np.exp(-h * lam)
        out[i + 1] = E * out[i] + 0.5 * h * (E * forcing[i] + forcing[i + 1])
    return out


def duhamel(u_traj, v_traj, times, t: float, params: ModelParams) -> SpectralField:
    """H(u, v)(t) = int_0^t S(t - tau) div(u grad P v)(tau) dtau.

    ``u_traj``/``v_traj`` are sequences of SpectralFields on ``times``; ``t``
    must be one of the nodes.
    """
    times = np.asarray(times, dtype=float)
    if len(u_traj) != len(times) or len(v_traj) != len(times):
        raise ValueError("trajectories and time nodes differ in length")
    idx = np.flatnonzero(np.isclose(times, t, rtol=0, atol=1e-14 * max(1.0, abs(t))))
    if times[0] != 0.0 or len(idx) == 0:
        raise ValueError("duhamel needs nodes starting at 0 and containing t")
    k = int(idx[0])
    if k == 0:
        return SpectralField.zeros(u_traj[0].grid)
    grid = u_traj[0].grid
    nl = _Nonlinearity(grid, params.pressure)
    a = np.stack([f.coeffs for f in u_traj[: k + 1]])
    b = np.stack([f.coeffs for f in v_traj[: k + 1]])
    forcing = nl.bilinear(a, b)
    lam = fractional_laplacian_symbol(grid, params.alpha)
    return SpectralField(grid, duhamel_arrays(times[: k + 1], forcing, lam)[k])


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """phi1(z) = (e^z - 1)/z and phi2(z) = (e^z - 1 - z)/z^2, stable near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    em1 = np.expm1(zs)
    phi1 = np.where(small, 1.0 + z / 2.0 + z * z / 6.0 + z**3 / 24.0, em1 / zs)
    phi2 = np.where(small, 0.5 + z / 6.0 + z * z / 24.0 + z**3 / 120.0, (em1 - zs) / (zs * zs))
    return phi1, phi2


@dataclass
class MarchResult:
    record: TrajectoryRecord
    final: SpectralField
    status: str  # "ok" | "blown"
    blowup_time: float | None
    steps: int
    message: str = ""
    snapshots: dict = field(default_factory=dict)
    wall_time: float = 0.0


def _time_breakpoints(T: float, snapshots) -> list[float]:
    pts = sorted({float(s) for s in snapshots if 0.0 < s < T} | {float(T)})
    return pts


class _Recorder:
    def __init__(self, P: DyadicPartition, params: ModelParams):
        self.P = P
        self.params = params
        self.times: list[float] = []
        self.blocks: list[np.ndarray] = []
        self.fb_beta: list[float] = []
        self.fb_beta_alpha: list[float] = []
        self.integral: list[float] = []
        self.mean: list[complex] = []

    def fb_pair(self, coeffs):
        b = block_norms(coeffs, self.P, self.params.p)
        js = self.P.js
        q = self.params.q
        return b, float(fb_from_blocks(b, js, self.params.beta, q)), float(
            fb_from_blocks(b, js, self.params.beta + self.params.alpha, q)
        )

    def add(self, t: float, coeffs: np.ndarray, pair=None):
        b, f0, f1 = pair if pair is not None else self.fb_pair(coeffs)
        if self.times:
            dt = t - self.times[-1]
            running = self.integral[-1] + 0.5 * dt * (self.fb_beta_alpha[-1] + f1)
        else:
            running = 0.0
        self.times.append(t)
        self.blocks.append(b)
        self.fb_beta.append(f0)
        self.fb_beta_alpha.append(f1)
        self.integral.append(running)
        self.mean.append(complex(coeffs[(0,) * self.P.grid.n]))

    def record(self) -> TrajectoryRecord:
        beta = self.params.norm_params()
        beta_alpha = self.params.norm_params(self.params.alpha)
        return TrajectoryRecord(
            times=np.array(self.times),
            js=tuple(self.P.js),
            p=self.params.p,
            block_norms=np.array(self.blocks),
            fb_norms={
                beta.label: np.array(self.fb_beta),
                beta_alpha.label: np.array(self.fb_beta_alpha),
            },
            blowup_integral=np.array(self.integral),
            mean_mode=np.array(self.mean),
        )


def time_march(
    u0: SpectralField,
    params: ModelParams,
    config: SolverConfig,
    P: DyadicPartition | None = None,
) -> MarchResult:
    """ETD-RK2 integration from 0 to config.T.

    Steps are uniform within each interval between snapshot times (and T),
    never longer than ``config.dt`` (default: 0.25 (dxi N/3)^-alpha).  The
    record is sampled every ``record_every`` steps and always at 0, at every
    snapshot and at the final time.  A non-finite state or an FB^beta norm
    above ``ceiling`` times its initial value stops the run with status
    ``"blown"``.
    """
    grid = u0.grid
    P = P or build_partition(grid)
    started = _time.perf_counter()
    lam = fractional_laplacian_symbol(grid, params.alpha)
    nl = _Nonlinearity(grid, params.pressure) if params.nonlinear else None
    dt_max = config.dt or default_dt(grid, params.alpha)

    coeffs = np.where(grid.dealias_mask, u0.coeffs, 0.0) if params.nonlinear else u0.coeffs.copy()
    rec = _Recorder(P, params)
    pair = rec.fb_pair(coeffs)
    rec.add(0.0, coeffs, pair)
    fb0 = pair[1]
    limit = config.ceiling * fb0 if fb0 > 0 else math.inf

    snaps = {}
    if any(s == 0.0 for s in config.snapshots):
        snaps[0.0] = SpectralField(grid, coeffs.copy())
    cache: dict[float, tuple] = {}

    def coefficients(h):
        key = round(h, 15)
        if key not in cache:
            z = -h * lam
            E = np.exp(z)
            phi1, phi2 = phi_functions(z)
            cache[key] = (E, h * phi1, h * phi2)
        return cache[key]

    t = 0.0
    steps = 0
    status, blow_t, message = "ok", None, ""
    try:
        for t_end in _time_breakpoints(config.T, config.snapshots):
            n_sub = max(1, math.ceil((t_end - t) / dt_max - 1e-9))
            h = (t_end - t) / n_sub
            E, c1, c2 = coefficients(h)
            t_start = t
            for i in range(n_sub):
                if nl is None:
                    coeffs = E * coeffs
                else:
                    n0 = nl(coeffs)
                    a = E * coeffs + c1 * n0
                    coeffs = a + c2 * (nl(a) - n0)
                steps += 1
                t = t_start + (i + 1) * h if i + 1 < n_sub else t_end
                if not np.all(np.isfinite(coeffs)):
                    raise NumericalBlowup("non-finite state", t)
                pair = rec.fb_pair(coeffs)
                if not math.isfinite(pair[1]) or pair[1] > limit:
                    if math.isfinite(pair[2]):
                        rec.add(t, coeffs, pair)
                    raise NumericalBlowup(
                        f"FB^beta norm {pair[1]:.3e} exceeded ceiling {limit:.3e}", t
                    )
                if steps % config.record_every == 0 or t == t_end:
                    rec.add(t, coeffs, pair)
            if t_end in config.snapshots:
                snaps[t_end] = SpectralField(grid, coeffs.copy())
    except NumericalBlowup as exc:
        status, blow_t, message = "blown", exc.t, str(exc)
        logger.info("run stopped at t=%s: %s", exc.t, exc)

    return MarchResult(
        record=rec.record(),
        final=SpectralField(grid, coeffs),
        status=status,
        blowup_time=blow_t,
        steps=steps,
        message=message,
        snapshots=snaps,
        wall_time=_time.perf_counter() - started,
    )


@dataclass
class PicardResult:
    record: TrajectoryRecord
    times: np.ndarray
    trajectory: np.ndarray  # coefficients, shape (nodes+1,) + grid shape
    final: SpectralField
    status: str  # "converged" | "diverged" | "max_iter"
    iterations: int
    increments: list
    ratios: list
    x_norm: float
    x_params: FBNormParams
    linear_x_norm: float

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def x_norm(coeffs: np.ndarray, times: np.ndarray, P: DyadicPartition, params: FBNormParams, r: float) -> float:
    """L~^r_T(FB^beta) of a stored trajectory."""
    b = block_norms(coeffs, P, params.p)
    per_block = time_norm(b, times, r)
    return float(fb_from_blocks(per_block, P.js, params.beta, params.q))


def picard_solve(
    u0: SpectralField,
    params: ModelParams,
    config: SolverConfig,
    P: DyadicPartition | None = None,
) -> PicardResult:
    """Iterate u <- S(t)u0 + H(u, u) on a uniform mesh of ``picard_nodes`` steps.

    Convergence is measured in X = L~^r_T(FB^{beta + alpha/r}_{p,q}) with
    r = ``picard_r`` (2 by default): stop once ||u_{m+1} - u_m||_X falls below
    ``picard_tol`` times ||u_{m+1}||_X.  Three consecutive increment ratios
    >= 1 mark the iteration as diverging.
    """
    grid = u0.grid
    P = P or build_partition(grid)
    r = config.picard_r
    xp = params.norm_params(params.alpha / r)
    times = np.linspace(0.0, config.T, config.picard_nodes + 1)
    lam = fractional_laplacian_symbol(grid, params.alpha)
    c0 = np.where(grid.dealias_mask, u0.coeffs, 0.0) if params.nonlinear else u0.coeffs
    linear = np.exp(-times.reshape((-1,) + (1,) * grid.n) * lam) * c0
    nl = _Nonlinearity(grid, params.pressure)

    current = linear
    lin_norm = x_norm(linear, times, P, xp, r)
    increments, ratios = [], []
    status = "max_iter"
    diverging = 0
    iterations = 0
    for m in range(config.picard_max_iter):
        if params.nonlinear:
            forcing = nl.bilinear(current, current)
            if not np.all(np.isfinite(forcing)):
                status = "diverged"
                break
            nxt = linear + duhamel_arrays(times, forcing, lam)
        else:
            nxt = linear
        iterations = m + 1
        inc = x_norm(nxt - current, times, P, xp, r)
        size = x_norm(nxt, times, P, xp, r)
        if increments:
            ratio = inc / increments[-1] if increments[-1] > 0 else 0.0
            ratios.append(ratio)
            diverging = diverging + 1 if ratio >= 1.0 else 0
        increments.append(inc)
        current = nxt
        if inc <= config.picard_tol * size or size == 0.0:
            status = "converged"
            break
        if diverging >= 3 or not math.isfinite(inc):
            status = "diverged"
            break

    rec = TrajectoryRecord.from_coeffs(times, current, P, params.p)
    b0, b1 = params.norm_params(), params.norm_params(params.alpha)
    upper = rec.fb_series(b1)
    rec.fb_norms = {b0.label: rec.fb_series(b0), b1.label: upper}
    rec.blowup_integral = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(times) * (upper[1:] + upper[:-1]))])
    rec.mean_mode = current[(slice(None),) + (0,) * grid.n].copy()
    return PicardResult(
        record=rec,
        times=times,
        trajectory=current,
        final=SpectralField(grid, current[-1].copy()),
        status=status,
        iterations=iterations,
        increments=increments,
        ratios=ratios,
        x_norm=x_norm(current, times, P, xp, r),
        x_params=xp,
        linear_x_norm=lin_norm,
    )

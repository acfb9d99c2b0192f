"""JSON run and sweep configurations (strict: unknown keys are rejected)."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..littlewood_paley import build_partition
from ..pressure import PressureSpec, load_symbol_csv
from ..solver import ModelParams, SolverConfig
from ..spectral import GridSpec

__all__ = [
    "ConfigError",
    "RunConfig",
    "SweepConfig",
    "load_run_config",
    "load_sweep_config",
]


class ConfigError(ValueError):
    """Raised with one ``field.path: message`` line per problem."""

    def __init__(self, source, problems: list[str]):
        self.source = str(source)
        self.problems = problems
        super().__init__(f"{source}: invalid configuration\n" + "\n".join(f"  {p}" for p in problems))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


Exponent = float  # JSON has no infinity; "inf" strings are accepted by float parsing


class GridSection(_Strict):
    n: int = Field(ge=1, le=3)
    N: int = Field(ge=8)
    L: float = Field(gt=0)

    @field_validator("N")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("N must be even")
        return v

    def spec(self) -> GridSpec:
        return GridSpec(self.n, self.N, self.L)


class PressureSection(_Strict):
    kind: Literal["riesz", "identity", "exp_kernel", "custom"]
    s: Optional[float] = None
    sign: float = 1.0
    symbol_path: Optional[Path] = None
    sigma: Optional[float] = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.kind == "riesz" and (self.s is None or not 0 < self.s <= 1):
            raise ValueError("riesz pressure needs 0 < s <= 1")
        if self.kind == "exp_kernel" and self.sign not in (1.0, -1.0):
            raise ValueError("exp_kernel sign must be +1 or -1")
        if self.kind == "custom" and (self.symbol_path is None or self.sigma is None):
            raise ValueError("custom pressure needs symbol_path and sigma")
        return self

    def spec(self, grid: GridSpec) -> PressureSpec:
        if self.kind == "riesz":
            return PressureSpec.riesz(self.s)
        if self.kind == "identity":
            return PressureSpec.identity()
        if self.kind == "exp_kernel":
            return PressureSpec.exp_kernel(self.sign)
        return PressureSpec("custom", symbol=load_symbol_csv(self.symbol_path, grid), custom_sigma=self.sigma)


class NormSection(_Strict):
    p: Exponent = Field(default=2.0, ge=1)
    q: Exponent = Field(default=2.0, ge=1)


class ModelSection(_Strict):
    alpha: float = Field(gt=0)
    pressure: PressureSection
    norm: NormSection = NormSection()
    nonlinear: bool = True


class PicardSection(_Strict):
    max_iter: int = Field(default=50, ge=1)
    tol: float = Field(default=1e-10, gt=0)
    nodes: int = Field(default=64, ge=2)
    r: Exponent = Field(default=2.0, ge=1)


class SolverSection(_Strict):
    T: float = Field(gt=0)
    dt: Optional[float] = Field(default=None, gt=0)
    record_every: int = Field(default=1, ge=1)
    method: Literal["march", "picard"] = "march"
    picard: PicardSection = PicardSection()
    ceiling: float = Field(default=1e8, gt=1)


class InitialDataSection(_Strict):
    kind: Literal["gaussian", "block_bump", "file"]
    amplitude: float = 1.0
    width: float = Field(default=1.0, gt=0)
    block: Optional[int] = None
    seed: Optional[int] = None
    path: Optional[Path] = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.kind == "file" and self.path is None:
            raise ValueError("file initial data needs a path")
        if self.kind == "block_bump" and self.block is None:
            raise ValueError("block_bump initial data needs a block index")
        return self


class OutputSection(_Strict):
    dir: Path
    snapshots: list[float] = []


class RunConfig(_Strict):
    grid: GridSection
    model: ModelSection
    solver: SolverSection
    initial_data: InitialDataSection
    output: OutputSection
    seed: int = 0

    @model_validator(mode="after")
    def _snapshots_in_range(self):
        bad = [t for t in self.output.snapshots if not 0 <= t <= self.solver.T]
        if bad:
            raise ValueError(f"snapshot times outside [0, T]: {bad}")
        return self

    def grid_spec(self) -> GridSpec:
        return self.grid.spec()

    def model_params(self) -> ModelParams:
        grid = self.grid_spec()
        return ModelParams(
            alpha=self.model.alpha,
            pressure=self.model.pressure.spec(grid),
            n=self.grid.n,
            p=self.model.norm.p,
            q=self.model.norm.q,
            nonlinear=self.model.nonlinear,
        )

    def solver_config(self) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            T=s.T,
            dt=s.dt,
            record_every=s.record_every,
            picard_max_iter=s.picard.max_iter,
            picard_tol=s.picard.tol,
            picard_nodes=s.picard.nodes,
            picard_r=s.picard.r,
            ceiling=s.ceiling,
            snapshots=tuple(self.output.snapshots),
        )

    @property
    def beta(self) -> float:
        return self.model_params().beta


class SweepAxes(_Strict):
    alpha: list[float] = Field(min_length=1)
    s: Optional[list[float]] = None  # riesz order; overrides the base pressure s
    p: list[Exponent] = Field(default=[2.0], min_length=1)
    q: list[Exponent] = Field(default=[2.0], min_length=1)
    amplitude: list[float] = Field(default=[1.0], min_length=1)


class SweepConfig(_Strict):
    grid: GridSection
    pressure: PressureSection
    nonlinear: bool = True
    solver: SolverSection
    initial_data: InitialDataSection
    sweep: SweepAxes
    r: Exponent = Field(default=math.inf, gt=1)
    C_fit: Optional[float] = Field(default=None, gt=0)
    fit_cases: int = Field(default=20, ge=1)
    output: Path
    seed: int = 0

    @model_validator(mode="after")
    def _s_axis(self):
        if self.sweep.s is not None and self.pressure.kind != "riesz":
            raise ValueError("the s axis only applies to riesz pressure")
        return self


def _format_errors(exc: ValidationError) -> list[str]:
    out = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        out.append(f"{loc}: {err['msg']}")
    return out


def _resolve_paths(raw: dict, base: Path, paths) -> None:
    for keys in paths:
        node = raw
        for k in keys[:-1]:
            node = node.get(k) if isinstance(node, dict) else None
            if node is None:
                break
        else:
            if isinstance(node, dict) and isinstance(node.get(keys[-1]), str):
                p = Path(node[keys[-1]])
                node[keys[-1]] = str(p if p.is_absolute() else base / p)


def _check_files(raw_paths: list[tuple[str, Optional[Path]]]) -> list[str]:
    return [f"{loc}: file not found: {p}" for loc, p in raw_paths if p is not None and not p.is_file()]


def _load(path, model, file_fields, path_keys):
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(path, ["<root>: config file not found"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError(path, [f"<root>: not valid JSON ({exc.msg} at line {exc.lineno})"]) from None
    if not isinstance(raw, dict):
        raise ConfigError(path, ["<root>: expected a JSON object"])
    _resolve_paths(raw, path.parent, path_keys)
    try:
        cfg = model.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(path, _format_errors(exc)) from None
    missing = _check_files(file_fields(cfg))
    if missing:
        raise ConfigError(path, missing)
    return cfg


def load_run_config(path) -> RunConfig:
    cfg = _load(
        path,
        RunConfig,
        lambda c: [
            ("model.pressure.symbol_path", c.model.pressure.symbol_path),
            ("initial_data.path", c.initial_data.path),
        ],
        [("model", "pressure", "symbol_path"), ("initial_data", "path"), ("output", "dir")],
    )
    try:
        grid = cfg.grid_spec()
        build_partition(grid)
        cfg.model_params()
    except ValueError as exc:
        raise ConfigError(path, [f"<derived>: {exc}"]) from None
    return cfg


def load_sweep_config(path) -> SweepConfig:
    cfg = _load(
        path,
        SweepConfig,
        lambda c: [("pressure.symbol_path", c.pressure.symbol_path), ("initial_data.path", c.initial_data.path)],
        [("pressure", "symbol_path"), ("initial_data", "path"), ("output",)],
    )
    try:
        build_partition(cfg.grid.spec())
    except ValueError as exc:
        raise ConfigError(path, [f"<derived>: {exc}"]) from None
    return cfg

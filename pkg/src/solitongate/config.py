"""Run configuration read by the command-line tool.

Every field has a default, so an empty file reproduces the headline
scenario.  Numerical fields left unset fall back to the per-command
defaults: the fine preset for single runs and the sweep preset for scans.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .analysis import AnalysisRegion
from .gate import GateParams, parse_controls
from .grid import DEFAULT_LENGTH, DEFAULT_POINTS, Grid
from .model import Couplings, PotentialConfig
from .solver import NumericsConfig
from .sweep import SWEEP_GRID_POINTS, SWEEP_NUMERICS


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Physics(_Section):
    u: float = Field(1.4, gt=0)
    v: float = 0.525
    x0: float = -30.0
    delta: float = -10.0
    base_depth: float = Field(4.0, gt=0)
    alpha: float = Field(1.08, gt=0)
    x1: float = -10.0
    x2: float = 10.0
    w1: float = Field(0.5, gt=0)
    w2: float = Field(0.5, gt=0)
    g11: float = 1.0
    g22: float = 1.0
    g12: float = Field(0.0, ge=0)
    theta_r: float = Field(0.9, gt=0.5, lt=1)
    theta_t: float = Field(0.9, gt=0.5, lt=1)

    def gate_params(self) -> GateParams:
        data = self.model_dump()
        couplings = Couplings(data.pop("g11"), data.pop("g22"), data.pop("g12"))
        return GateParams(couplings=couplings, **data)


class Numerics(_Section):
    dt: Optional[float] = Field(None, gt=0)
    t_final: Optional[float] = Field(None, ge=0)
    snapshot_stride: Optional[int] = Field(None, ge=0)

    def resolve(self, default: NumericsConfig) -> NumericsConfig:
        return NumericsConfig(
            dt=default.dt if self.dt is None else self.dt,
            t_final=default.t_final if self.t_final is None else self.t_final,
            snapshot_stride=default.snapshot_stride if self.snapshot_stride is None else self.snapshot_stride,
        )


class GridSettings(_Section):
    length: float = Field(DEFAULT_LENGTH, gt=0)
    points: Optional[int] = Field(None, ge=2)

    @field_validator("points")
    @classmethod
    def _even(cls, value):
        if value is not None and value % 2:
            raise ValueError("must be even")
        return value

    def resolve(self, default_points: int) -> Grid:
        return Grid(self.length, self.points or default_points)


class Region(_Section):
    l1: float = -15.0
    l2: float = 15.0

    @model_validator(mode="after")
    def _ordered(self):
        if not self.l1 < self.l2:
            raise ValueError("l1 must be smaller than l2")
        return self

    def region(self) -> AnalysisRegion:
        return AnalysisRegion(self.l1, self.l2)


class Scenario(_Section):
    controls: str = "11"
    target: int = Field(0, ge=0, le=1)

    @field_validator("controls", mode="before")
    @classmethod
    def _bits(cls, value):
        if isinstance(value, (list, tuple)):
            value = "".join(str(int(b)) for b in value)
        value = str(value)
        if value in ("0", "1"):
            # YAML reads 01 and 00 as integers
            value = format(int(value), "02b")
        parse_controls(value)
        return value


class Axis(_Section):
    """Either explicit ``values`` or ``min``/``max`` with ``num`` points or a ``step``."""

    values: Optional[list[float]] = None
    min: Optional[float] = None
    max: Optional[float] = None
    num: Optional[int] = Field(None, ge=1)
    step: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _complete(self):
        if self.values is not None:
            if not self.values:
                raise ValueError("values must not be empty")
            return self
        if self.min is None or self.max is None:
            raise ValueError("give either values or min and max")
        if self.max < self.min:
            raise ValueError("max must not be below min")
        if (self.num is None) == (self.step is None):
            raise ValueError("give exactly one of num or step")
        return self

    def array(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.num is not None:
            return np.linspace(self.min, self.max, self.num)
        count = int(np.floor((self.max - self.min) / self.step + 1e-9)) + 1
        # rounding keeps grid values such as 0.4925 exact in the output tables
        return np.round(self.min + self.step * np.arange(count), 12)


class Sweep(_Section):
    v: Optional[Axis] = None
    u: Axis = Field(default_factory=lambda: Axis(min=1.0, max=1.6, num=30))
    alphas: list[float] = Field(default_factory=lambda: [1.08])
    g12s: list[float] = Field(default_factory=lambda: [0.0])

    @field_validator("alphas")
    @classmethod
    def _positive(cls, value):
        if not value or any(a <= 0 for a in value):
            raise ValueError("alphas must be a non-empty list of positive numbers")
        return value

    @field_validator("g12s")
    @classmethod
    def _non_negative(cls, value):
        if not value or any(g < 0 for g in value):
            raise ValueError("g12s must be a non-empty list of non-negative numbers")
        return value

    def velocity_axis(self) -> np.ndarray:
        return (self.v or Axis(min=0.46, max=0.57, step=0.0025)).array()

    def plane_v_axis(self) -> np.ndarray:
        return (self.v or Axis(min=0.40, max=0.60, num=40)).array()


class Critical(_Section):
    controls: str = "01"
    v_bracket: tuple[float, float] = (0.2, 1.0)
    tol: float = Field(1e-3, gt=0)

    @field_validator("controls", mode="before")
    @classmethod
    def _bits(cls, value):
        return Scenario._bits(value)

    @field_validator("controls")
    @classmethod
    def _has_well(cls, value):
        if value == "00":
            raise ValueError("needs at least one well")
        return value


class Output(_Section):
    space_stride: int = Field(4, ge=1)


class RunConfig(_Section):
    physics: Physics = Field(default_factory=Physics)
    numerics: Numerics = Field(default_factory=Numerics)
    grid: GridSettings = Field(default_factory=GridSettings)
    region: Region = Field(default_factory=Region)
    scenario: Scenario = Field(default_factory=Scenario)
    sweep: Sweep = Field(default_factory=Sweep)
    critical: Critical = Field(default_factory=Critical)
    output: Output = Field(default_factory=Output)
    workers: Optional[int] = Field(None, ge=1)

    # resolved objects used by the commands
    def params(self) -> GateParams:
        return self.physics.gate_params()

    def single_run_numerics(self) -> NumericsConfig:
        return self.numerics.resolve(NumericsConfig(0.005, 200.0, 400))

    def single_run_grid(self) -> Grid:
        return self.grid.resolve(DEFAULT_POINTS)

    def sweep_numerics(self) -> NumericsConfig:
        return self.numerics.resolve(SWEEP_NUMERICS)

    def sweep_grid(self) -> Grid:
        return self.grid.resolve(SWEEP_GRID_POINTS)

    def critical_wells(self) -> PotentialConfig:
        return self.params().wells_for(parse_controls(self.critical.controls))


def load_config(path: Optional[Path]) -> RunConfig:
    if path is None:
        return RunConfig()
    text = Path(path).read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return RunConfig.model_validate(data)

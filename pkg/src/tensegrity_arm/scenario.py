"""Scenario files: strict schema, dotted overrides and degree inputs.

A scenario is one JSON object.  Every block has defaults, so ``{}`` is a
valid scenario describing a/b = 0.75, k = 1, L0 = 1 with the tip at 5.5b.
"""

from __future__ import annotations

import copy
import json
import math
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import DomainError
from .numerics import SolverSettings
from .segment import SegmentControls, SegmentGeometry


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LinearGrid(_Strict):
    """Evenly spaced grid; omitted fields take the command's default."""

    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = Field(None, ge=0)

    def values(self) -> np.ndarray:
        if self.start is None or self.stop is None or self.num is None:
            raise ValueError("grid is incomplete; call resolve_defaults first")
        return np.linspace(self.start, self.stop, self.num)


class ExplicitGrid(_Strict):
    values_: list[float] = Field(alias="values")

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    def values(self) -> np.ndarray:
        return np.asarray(self.values_, dtype=float)


Grid = Union[ExplicitGrid, LinearGrid]


def _complete(grid: Optional[Grid], start: float, stop: float, num: int) -> Grid:
    if isinstance(grid, ExplicitGrid):
        return grid
    default = LinearGrid(start=start, stop=stop, num=num)
    if grid is None:
        return default
    given = grid.model_dump(exclude_none=True)
    return default.model_copy(update=given)


class Geometry(_Strict):
    a: float = Field(0.75, gt=0)
    b: float = Field(1.0, gt=0)
    k: float = Field(1.0, gt=0)


class Controls(_Strict):
    l0: Optional[float] = Field(None, gt=0)
    springs: Optional[list[float]] = None

    @model_validator(mode="after")
    def _one_form(self):
        if self.l0 is None and self.springs is None:
            self.l0 = 1.0
        if self.l0 is not None and self.springs is not None:
            raise ValueError("give either l0 or springs, not both")
        if self.springs is not None:
            if len(self.springs) != 6:
                raise ValueError("springs needs six free lengths (two per segment)")
            if any(not (v > 0) for v in self.springs):
                raise ValueError("spring free lengths must be positive")
        return self

    def segments(self) -> tuple:
        if self.springs is None:
            c = SegmentControls.symmetric(self.l0)
            return (c, c, c)
        s = self.springs
        return tuple(SegmentControls(s[2 * i], s[2 * i + 1]) for i in range(3))


class Solver(_Strict):
    max_iterations: int = 100
    residual_tolerance: float = 1e-10
    fd_step: float = 1e-6
    damping: float = 0.5
    max_halvings: int = 30

    def settings(self) -> SolverSettings:
        return SolverSettings(**self.model_dump())

    @model_validator(mode="after")
    def _valid(self):
        self.settings()
        return self


Point = tuple[float, float]


class SegmentTorqueBlock(_Strict):
    q_grid: Optional[Grid] = None
    segment: Literal[1, 2, 3] = 1


class EnergyCurveBlock(_Strict):
    endpoint: Optional[Point] = None
    q1_grid: Optional[Grid] = None


class EquilibriaBlock(_Strict):
    endpoint: Optional[Point] = None
    grid_n: int = Field(2001, ge=2)


class ForceDeflectionBlock(_Strict):
    start: Optional[Point] = None
    direction: Literal["x", "y"] = "x"
    branch: Literal[1, -1] = 1
    deflection_grid: Optional[Grid] = None
    jump_factor: float = Field(10.0, gt=0)
    jump_floor: float = Field(0.05, ge=0)
    unload_start: bool = True


class StiffnessProfileBlock(_Strict):
    start: Optional[Point] = None
    force_axis: Literal["x", "y"] = "x"
    branch: Literal[1, -1] = 1
    force_grid: Optional[Grid] = None
    collapse_ratio: float = Field(0.1, ge=0, lt=1)
    limit_ratio: float = Field(0.95, gt=0, le=1)
    jump_rad: float = Field(0.2, gt=0)


class Scenario(_Strict):
    geometry: Geometry = Geometry()
    controls: Controls = Controls()
    joint_limit: Union[Literal["auto"], float] = "auto"
    solver: Solver = Solver()
    segment_torque: SegmentTorqueBlock = SegmentTorqueBlock()
    energy_curve: EnergyCurveBlock = EnergyCurveBlock()
    equilibria: EquilibriaBlock = EquilibriaBlock()
    force_deflection: ForceDeflectionBlock = ForceDeflectionBlock()
    stiffness_profile: StiffnessProfileBlock = StiffnessProfileBlock()

    @field_validator("joint_limit")
    @classmethod
    def _limit_positive(cls, v):
        if v != "auto" and not (0 < v <= math.pi):
            raise ValueError("joint_limit must be 'auto' or a number in (0, pi]")
        return v

    @model_validator(mode="after")
    def _physical(self):
        try:
            geom = self.segment_geometry()
            for c in self.controls.segments():
                c.check_against(geom)
        except DomainError as exc:
            raise ValueError(str(exc)) from None
        return self

    def segment_geometry(self) -> SegmentGeometry:
        g = self.geometry
        lim = None if self.joint_limit == "auto" else float(self.joint_limit)
        return SegmentGeometry.symmetric(g.a, g.b, g.k, lim)

    def resolve_defaults(self) -> "Scenario":
        """Fill endpoint and grid defaults that depend on other fields."""
        s = self.model_copy(deep=True)
        b = s.geometry.b
        qm = s.segment_geometry().q_max
        home = (5.5 * b, 0.0)
        kb = s.geometry.k * b
        s.segment_torque.q_grid = _complete(s.segment_torque.q_grid, -qm, qm, 201)
        s.energy_curve.q1_grid = _complete(s.energy_curve.q1_grid, -qm, qm, 2001)
        s.force_deflection.deflection_grid = _complete(s.force_deflection.deflection_grid, 1e-3 * b, 0.5 * b, 100)
        s.stiffness_profile.force_grid = _complete(s.stiffness_profile.force_grid, 0.0, -0.05 * kb, 51)
        if s.energy_curve.endpoint is None:
            s.energy_curve.endpoint = home
        if s.equilibria.endpoint is None:
            s.equilibria.endpoint = home
        if s.force_deflection.start is None:
            s.force_deflection.start = (6.0 * b, 0.0)
        if s.stiffness_profile.start is None:
            s.stiffness_profile.start = home
        return s


# raw-document helpers ------------------------------------------------------


def convert_degrees(doc: Any) -> Any:
    """Replace every ``<name>_deg`` key by ``<name>`` in radians."""
    if isinstance(doc, list):
        return [convert_degrees(v) for v in doc]
    if not isinstance(doc, dict):
        return doc
    out = {}
    for key, val in doc.items():
        val = convert_degrees(val)
        if isinstance(key, str) and key.endswith("_deg"):
            base = key[: -len("_deg")]
            if base in doc:
                raise ValueError(f"both {key!r} and {base!r} given")
            out[base] = _to_radians(val, key)
        else:
            out[key] = val
    return out


def _to_radians(val, key):
    if isinstance(val, bool):
        raise ValueError(f"{key}: expected a number")
    if isinstance(val, (int, float)):
        return math.radians(val)
    if isinstance(val, list):
        return [_to_radians(v, key) for v in val]
    if isinstance(val, dict):
        # a grid given in degrees: convert its angular members
        return {k: (_to_radians(v, key) if k in ("start", "stop", "values") else v) for k, v in val.items()}
    raise ValueError(f"{key}: expected a number, list or grid")


def parse_override(text: str) -> tuple[list[str], Any]:
    if "=" not in text:
        raise ValueError(f"override {text!r} is not of the form key.path=value")
    path, raw = text.split("=", 1)
    keys = [p for p in path.strip().split(".") if p]
    if not keys:
        raise ValueError(f"override {text!r} has an empty key path")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return keys, value


def set_path(doc: dict, keys: list[str], value) -> None:
    node = doc
    for k in keys[:-1]:
        nxt = node.get(k)
        if not isinstance(nxt, dict):
            nxt = {}
            node[k] = nxt
        node = nxt
    node[keys[-1]] = value


def deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def build_scenario(doc: dict | None = None, overrides=(), merged: dict | None = None) -> Scenario:
    """Validate a raw scenario document after applying overrides.

    ``merged`` is a whole document (e.g. the resolved scenario of an earlier
    run summary) laid over ``doc`` before the dotted ``overrides``.
    """
    raw = copy.deepcopy(doc or {})
    if not isinstance(raw, dict):
        raise ValueError("scenario must be a JSON object")
    if merged:
        raw = deep_merge(raw, merged)
    for text in overrides:
        keys, value = parse_override(text)
        set_path(raw, keys, value)
    raw = convert_degrees(raw)
    return Scenario.model_validate(raw)


def scenario_to_json(s: Scenario) -> dict:
    return s.model_dump(mode="json", by_alias=True)

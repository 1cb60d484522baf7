"""Declarative run configuration shared by the HTTP service and the CLI.

A run is described by a YAML document (or the equivalent JSON payload) with
nested sections for the geometry, the discretization and the continuation,
for example:

    k: 0.8*pi
    ell: 5.0
    obstacle:
      - {shape: rectangle, x0: -1.0, x1: 1.0, y0: 0.25, y1: 0.75}
    discretization: {nx: 200, ny: 20, order: 2, dtn_terms: 10}
    continuation:
      functional: reflection_only
      epsilon0: 0.5
      eta: 1.0e-8
      aleph: 3
      seed: 0

Wavenumbers may be plain numbers or strings like "0.8*pi".
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Annotated, Literal, Union

import yaml
from pydantic import BaseModel, Field, ValidationError

from . import geometry
from .errors import ConfigError

_PI_PATTERN = re.compile(r"^\s*([+-]?[0-9.eE+-]*?)\s*\*?\s*pi\s*$")


def parse_wavenumber(value) -> float:
    """Accept 2.51, "2.51", "0.8*pi", "0.8pi" or "pi"."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).strip()
    match = _PI_PATTERN.match(text)
    if match:
        coef = match.group(1)
        try:
            return (float(coef) if coef not in ("", "+", "-") else float(coef + "1")) * math.pi
        except ValueError as exc:
            raise ConfigError(f"cannot parse wavenumber {value!r}") from exc
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"cannot parse wavenumber {value!r}") from exc


class RectangleSpec(BaseModel):
    shape: Literal["rectangle"] = "rectangle"
    x0: float
    x1: float
    y0: float
    y1: float
    value: float | None = None  # used only in material-piece context

    def primitive(self) -> geometry.Rectangle:
        return geometry.Rectangle(self.x0, self.x1, self.y0, self.y1)


class EllipseSpec(BaseModel):
    shape: Literal["ellipse"] = "ellipse"
    cx: float
    cy: float
    rx: float
    ry: float
    value: float | None = None

    def primitive(self) -> geometry.Ellipse:
        return geometry.Ellipse(self.cx, self.cy, self.rx, self.ry)


class DiscSpec(BaseModel):
    shape: Literal["disc"] = "disc"
    cx: float
    cy: float
    r: float
    value: float | None = None

    def primitive(self) -> geometry.Ellipse:
        return geometry.Disc(self.cx, self.cy, self.r)


ShapeSpec = Annotated[Union[RectangleSpec, EllipseSpec, DiscSpec],
                      Field(discriminator="shape")]


class DiscretizationSpec(BaseModel):
    nx: int | None = None  # defaults to 40 cells per unit length
    ny: int = 20
    order: int = 2
    dtn_terms: int = 10


class ContinuationSpec(BaseModel):
    functional: str = "reflection_only"
    mode: int = 0
    epsilon0: float = 0.5
    eta: float = 1e-8
    max_iter: int = 50
    aleph: int = 0
    seed: int = 0
    seed_policy: Literal["fixed", "per-step"] = "fixed"
    trust_radius: float = 10.0
    acceptance_tol: float = 1e-6
    selection_threshold: float = 1e-2


class RunConfig(BaseModel):
    k: float | str
    ell: float = 5.0
    cutoff_margin: float = 1e-3
    obstacle: list[ShapeSpec]
    rho0: list[ShapeSpec] = Field(default_factory=list)
    mu: list[ShapeSpec] = Field(default_factory=list)
    discretization: DiscretizationSpec = Field(default_factory=DiscretizationSpec)
    continuation: ContinuationSpec = Field(default_factory=ContinuationSpec)
    partition: list[ShapeSpec] | None = None
    output_dir: str | None = None

    @property
    def wavenumber(self) -> float:
        return parse_wavenumber(self.k)

    def material_pieces(self, specs) -> list[tuple]:
        pieces = []
        for s in specs:
            if s.value is None:
                raise ConfigError(f"material piece {s} needs a 'value' field")
            pieces.append((s.primitive(), s.value))
        return pieces


def load_config(path) -> RunConfig:
    """Parse a YAML run configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc

"""Experiment configuration files and the shipped presets.

Configs are INI-style key/value files with section headers::

    [experiment]
    kind = closed-duct

    [duct]
    cross_section = square
    length = 3.4
    h1 = 0.04
    ...

Every named paper configuration ships as one file under ``presets/``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .mesh import Closure, DuctSpec, ElementKind

KINDS = ("closed-duct", "impedance-sweep", "resonance-search")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyPlan:
    """Explicit list, or a coarse range with an optional refinement step."""

    values: tuple[float, ...] = ()
    start: float | None = None
    stop: float | None = None
    step: float | None = None
    refine_step: float | None = None

    def __post_init__(self):
        if not self.values and self.start is None:
            raise ConfigError("frequency plan needs a list or a range")
        if self.start is not None:
            if self.stop is None or self.step is None:
                raise ConfigError("frequency range needs start, stop and step")
            if self.step <= 0 or self.stop < self.start:
                raise ConfigError("frequency range must be increasing with a positive step")
        if self.refine_step is not None and self.step is not None and self.refine_step > self.step:
            raise ConfigError("refinement step cannot exceed the coarse step")
        if any(f <= 0 for f in self.frequencies()):
            raise ConfigError("frequencies must be positive")

    def frequencies(self) -> list[float]:
        if self.values:
            return list(self.values)
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + i * self.step, 9) for i in range(n)]


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    name: str
    duct: DuctSpec
    element_kind: ElementKind
    frequencies: FrequencyPlan
    rho: float = 1.3
    c: float = 340.0
    v0: float = 1.0
    end_impedance: float = 1.0          # in units of rho c; closed ducts only
    wall_azimuth: float = math.pi
    grids: tuple[str, ...] = ()
    grid_n: int = 8
    grid_inset: float | None = None     # distance of the opening grid from the rim
    grid_half_width: float | None = None  # resonance grid, fraction of the radius
    grid_x: float | None = None
    strike_x: float = 0.03
    strike_azimuth: float = 0.0
    snapshots: tuple[float, ...] = ()
    description: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if self.rho <= 0 or self.c <= 0:
            raise ConfigError("density and sound speed must be positive")
        if self.grid_n < 1:
            raise ConfigError("evaluation grids need at least one point")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _get(section, key, default=None, conv=str):
    if key not in section:
        return default
    raw = section[key].strip()
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from exc


def parse_config(text: str, name: str = "config") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    for sec in ("experiment", "duct", "frequencies"):
        if sec not in cp:
            raise ConfigError(f"missing section [{sec}]")
    ex, du, fr = cp["experiment"], cp["duct"], cp["frequencies"]
    md = cp["medium"] if "medium" in cp else {}
    bc = cp["boundary"] if "boundary" in cp else {}
    ev = cp["evaluation"] if "evaluation" in cp else {}

    try:
        cross = _get(du, "cross_section", "square")
        width = _get(du, "width", 0.2, float)
        radius = _get(du, "radius", None, float)
        if cross == "circle" and radius is None:
            radius = width / math.sqrt(math.pi)
        n_c = _get(du, "circumferential", None, int)
        h2 = _get(du, "h2", None, float)
        if h2 is None and n_c is not None:
            h2 = 2 * math.pi * radius / n_c
        if h2 is None:
            raise ConfigError("duct needs h2 (or circumferential for circles)")
        length = _get(du, "length", None, float)
        h1 = _get(du, "h1", None, _floats)
        axial = _get(du, "axial_elements", None, int)
        if h1 is None and axial is not None:
            h1 = (length / axial,)
        rings = _get(du, "disc_rings", None, lambda s: tuple(int(t) for t in _floats(s)))
        spec = DuctSpec(
            length=length, h1=h1, h2=h2,
            h0=_get(du, "h0", None, float), hL=_get(du, "hL", None, float),
            cross_section=cross, width=width, radius=radius,
            closure_start=Closure(_get(du, "closure_start", "closed")),
            closure_end=Closure(_get(du, "closure_end", "closed")),
            disc_rings=rings,
        )
        if "list" in fr:
            plan = FrequencyPlan(values=_get(fr, "list", conv=_floats))
        else:
            plan = FrequencyPlan(start=_get(fr, "start", None, float), stop=_get(fr, "stop", None, float),
                                 step=_get(fr, "step", None, float),
                                 refine_step=_get(fr, "refine_step", None, float))
        grids = tuple(g.strip() for g in _get(ev, "grids", "").split(",") if g.strip())
        return ExperimentConfig(
            kind=_get(ex, "kind", "closed-duct"),
            name=_get(ex, "name", name),
            description=_get(ex, "description", ""),
            duct=spec,
            element_kind=ElementKind(_get(du, "element_kind", "thin")),
            frequencies=plan,
            rho=_get(md, "rho", 1.3, float),
            c=_get(md, "c", 340.0, float),
            v0=_get(bc, "v0", 1.0, float),
            end_impedance=_get(bc, "end_impedance", 1.0, float),
            wall_azimuth=_get(ev, "wall_azimuth", math.pi, float),
            grids=grids,
            grid_n=_get(ev, "grid_n", 8, int),
            grid_inset=_get(ev, "grid_inset", None, float),
            grid_half_width=_get(ev, "grid_half_width", None, float),
            grid_x=_get(ev, "grid_x", None, float),
            strike_x=_get(bc, "strike_x", 0.03, float),
            strike_azimuth=_get(bc, "strike_azimuth", 0.0, float),
            snapshots=_get(ev, "snapshots", (), _floats),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        # a bare name refers to a shipped preset
        return load_preset(str(path))
    return parse_config(path.read_text(), path.stem)


def _preset_dir():
    return resources.files("ductbem") / "presets"


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in _preset_dir().iterdir() if p.name.endswith(".ini"))


def load_preset(name: str) -> ExperimentConfig:
    res = _preset_dir() / f"{name}.ini"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    return parse_config(res.read_text(), name)


def preset_text(name: str) -> str:
    res = _preset_dir() / f"{name}.ini"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}")
    return res.read_text()


def with_frequencies(cfg: ExperimentConfig, freqs) -> ExperimentConfig:
    """Copy of ``cfg`` with an explicit frequency list."""
    return replace(cfg, frequencies=FrequencyPlan(values=tuple(float(f) for f in np.atleast_1d(freqs))))

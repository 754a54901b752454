"""Flat ``key = value`` run configuration and the shipped presets.

Grid values are either comma lists (``2, 3, 4``) or inclusive ranges
``start:stop:step`` (``2:9:1`` is ``2, 3, ..., 9``).  Lines starting with
``#`` or ``;`` are comments.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .basis import SystemSpec
from .dataset import DEFAULT_BARRIER_RATIO, parse_placement
from .kan import KanConfig


class ConfigError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    text = str(text).strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range {text!r} must look like start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"range step must be positive in {text!r}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(max(count, 0))]
    return [float(v) for v in text.split(",") if v.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _widths(text) -> tuple[int, ...]:
    return tuple(int(v) for v in str(text).replace("[", "").replace("]", "").split(",") if v.strip())


@dataclass
class RunConfig:
    L: int = 4
    n_up: int = 1
    n_down: int = 1
    J: float = 1.0
    U: float = 2.0
    h: float = 5.0
    barrier_ratio: float = DEFAULT_BARRIER_RATIO
    t_max: float = 100.0
    n_samples: int = 2001
    placement: str = "1u,1d"
    U_grid: str = "2:5.5:0.5"
    h_grid: str = "6"
    tunneling_only: bool = True
    n_knots: int = 8
    kan_widths: str = "2,3,1"
    kan_order: int = 3
    kan_grid_size: int = 10
    kan_grid_counts_basis: bool = False
    kan_lr: float = 0.01
    kan_epochs: int = 50
    kan_iterations_per_epoch: int = 20
    kan_base: bool = True
    kan_folds: int = 5
    seed: int = 0
    workers: int = 1
    out: str = "out"
    plots: bool = False

    # keys that do not change any numerical output
    NON_SEMANTIC = ("workers", "out", "plots")

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        cfg = cls()
        for key, raw in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            typ = known[key].type
            try:
                if typ == "bool":
                    value = _bool(raw)
                elif typ == "int":
                    value = int(str(raw).strip())
                elif typ == "float":
                    value = float(str(raw).strip())
                else:
                    value = str(raw).strip()
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from None
            setattr(cfg, key, value)
        return cfg

    def system_spec(self, **overrides) -> SystemSpec:
        params = dict(
            L=self.L,
            n_up=self.n_up,
            n_down=self.n_down,
            J=self.J,
            U=self.U,
            barrier=(self.barrier_ratio * self.h, self.h),
            t_max=self.t_max,
            n_samples=self.n_samples,
            initial_placement=self.placement_tuple(),
        )
        params.update(overrides)
        try:
            return SystemSpec(**params)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def placement_tuple(self):
        try:
            return parse_placement(self.placement)
        except ValueError as exc:
            raise ConfigError(f"config key 'placement': {exc}") from None

    def grids(self) -> tuple[list[float], list[float]]:
        try:
            U_grid, h_grid = parse_grid(self.U_grid), parse_grid(self.h_grid)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not U_grid:
            raise ConfigError("config key 'U_grid' is empty")
        if not h_grid:
            raise ConfigError("config key 'h_grid' is empty")
        return U_grid, h_grid

    def kan_config(self) -> KanConfig:
        try:
            return KanConfig(
                widths=_widths(self.kan_widths),
                order=self.kan_order,
                grid_size=self.kan_grid_size,
                grid_counts_basis=self.kan_grid_counts_basis,
                lr=self.kan_lr,
                epochs=self.kan_epochs,
                iterations_per_epoch=self.kan_iterations_per_epoch,
                base=self.kan_base,
                seed=self.seed,
            )
        except ValueError as exc:
            raise ConfigError(f"kan config: {exc}") from None

    def canonical(self) -> str:
        lines = [
            f"{f.name}={getattr(self, f.name)}" for f in fields(self) if f.name not in self.NON_SEMANTIC
        ]
        return "\n".join(sorted(lines))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


PRESETS: dict[str, dict[str, str]] = {
    "fig2a": {"L": "4", "U": "2", "h": "5"},
    "fig2b": {"L": "4", "U": "4", "h": "6"},
    "fig3-L4": {"L": "4", "U_grid": "2:5.5:0.5", "h_grid": "6", "tunneling_only": "true"},
    "fig3-L8": {"L": "8", "U_grid": "2:5.5:0.5", "h_grid": "6", "tunneling_only": "true"},
    "fig3-h8-L4": {"L": "4", "U_grid": "2:7.5:0.5", "h_grid": "8", "tunneling_only": "true"},
    "fig3-h8-L8": {"L": "8", "U_grid": "2:7.5:0.5", "h_grid": "8", "tunneling_only": "true"},
    "fig4-L4": {"L": "4", "U_grid": "2:9:1", "h_grid": "5:10:1", "tunneling_only": "false"},
    "fig4-L8": {"L": "8", "U_grid": "2:9:1", "h_grid": "5:10:1", "tunneling_only": "false"},
    "l20-smoke": {"L": "20", "U": "4", "h": "6"},
}


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return dict(parser["run"])


def load_config(path=None, preset=None, overrides=None) -> RunConfig:
    """Preset values, then the config file, then explicit overrides."""
    mapping: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        mapping.update(PRESETS[preset])
    if path is not None:
        mapping.update(read_config_file(path))
    mapping.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_mapping(mapping)

"""Flat ``key = value`` run configuration with dotted section names.

Example::

    # default scenario
    grid.nx = 128
    params.chi = 1
    preset.name = gaussian-bump
    preset.tissue = cosine
    policy.t_end = 50
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .grid import GridSpec
from .integrator import StepPolicy
from .model import PRESET_DEFAULTS, Params


class ConfigError(ValueError):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _optional_float(text: str):
    return None if text.lower() in ("none", "") else float(text)


_SCALAR_KEYS = {
    "grid.nx": int,
    "grid.ny": int,
    "grid.lx": float,
    "grid.ly": float,
    "params.chi": float,
    "params.xi": float,
    "params.mu": float,
    "preset.name": str,
    "policy.dt_max": float,
    "policy.cfl_safety": float,
    "policy.t_end": float,
    "policy.record_every": float,
    "policy.snapshot_every": float,
    "analysis.p_list": _float_list,
    "tol.solver_tol": float,
    "tol.c_tol": float,
    "output.dir": str,
    "jobs": int,
}

_PRESET_KEYS = {
    "a": float, "sigma": float, "floor": float, "cx": _optional_float, "cy": _optional_float,
    "u_bar": float, "v_bar": float, "w_bar": float, "eps": float, "seed": int, "tissue": str,
}

DEFAULTS = {
    "grid.nx": 128,
    "grid.ny": 128,
    "grid.lx": 1.0,
    "grid.ly": 1.0,
    "params.chi": 1.0,
    "params.xi": 1.0,
    "params.mu": 1.0,
    "preset.name": "gaussian-bump",
    "policy.dt_max": 0.01,
    "policy.cfl_safety": 0.5,
    "policy.t_end": 50.0,
    "policy.record_every": 0.1,
    "policy.snapshot_every": 10.0,
    "analysis.p_list": (2.0, 3.0),
    "tol.solver_tol": 1e-10,
    "tol.c_tol": 800.0,
    "output.dir": "out",
    "jobs": 1,
}


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec
    params: Params
    preset: str
    preset_params: dict
    policy: StepPolicy
    p_list: tuple = (2.0, 3.0)
    c_tol: float = 800.0
    snapshot_every: float = 10.0
    output_dir: str = "out"
    jobs: int = 1
    source: dict = field(default_factory=dict, compare=False)

    @property
    def seed(self):
        if self.preset == "random":
            return self.preset_params.get("seed", PRESET_DEFAULTS["random"]["seed"])
        return None

    def resolved_output_dir(self) -> Path:
        out = Path(self.output_dir)
        root = os.environ.get("CHEMHAPTO_OUT")
        if root and not out.is_absolute():
            return Path(root) / out
        return out

    def with_value(self, key: str, value: str) -> RunConfig:
        """Return a copy with one dotted key overridden (string value, parsed as in files)."""
        if key not in _SCALAR_KEYS and not (key.startswith("preset.") and key[7:] in _PRESET_KEYS):
            raise ConfigError(f"unknown key {key!r}")
        raw = dict(self.source)
        raw[key] = (value, 0)
        return _build(raw, "<override>")

    def with_output_dir(self, path) -> RunConfig:
        return replace(self, output_dir=str(path))


def parse_config_text(text: str, origin: str = "<string>") -> RunConfig:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key in raw:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r} (first set on line {raw[key][1]})")
        if key not in _SCALAR_KEYS and not (key.startswith("preset.") and key[7:] in _PRESET_KEYS):
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        raw[key] = (value, lineno)
    return _build(raw, origin)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def default_config_path() -> Path:
    return Path(str(resources.files("chemhapto") / "data" / "default.cfg"))


def _build(raw: dict, origin: str) -> RunConfig:
    values = dict(DEFAULTS)
    preset_params = {}
    for key, (text, lineno) in raw.items():
        conv = _SCALAR_KEYS.get(key) or _PRESET_KEYS.get(key[7:])
        try:
            parsed = conv(text)
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value {text!r} for {key}: {exc}") from exc
        if key in _SCALAR_KEYS:
            values[key] = parsed
        else:
            preset_params[key[7:]] = parsed

    name = values["preset.name"]
    if name not in PRESET_DEFAULTS:
        raise ConfigError(f"{origin}: unknown preset {name!r}; choose from {sorted(PRESET_DEFAULTS)}")
    for key in preset_params:
        if key not in PRESET_DEFAULTS[name]:
            lineno = raw[f"preset.{key}"][1]
            raise ConfigError(f"{origin}:{lineno}: preset {name!r} does not take {key!r}")
    if not values["analysis.p_list"] or any(p <= 1 for p in values["analysis.p_list"]):
        raise ConfigError(f"{origin}: analysis.p_list entries must exceed 1")
    if values["jobs"] < 1:
        raise ConfigError(f"{origin}: jobs must be >= 1")
    if not values["policy.snapshot_every"] > 0:
        raise ConfigError(f"{origin}: policy.snapshot_every must be positive")

    try:
        grid = GridSpec(values["grid.nx"], values["grid.ny"], values["grid.lx"], values["grid.ly"])
        params = Params(values["params.chi"], values["params.xi"], values["params.mu"], values["tol.solver_tol"])
        policy = StepPolicy(
            values["policy.dt_max"], values["policy.cfl_safety"],
            values["policy.t_end"], values["policy.record_every"],
        )
    except ValueError as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    return RunConfig(
        grid=grid,
        params=params,
        preset=name,
        preset_params=preset_params,
        policy=policy,
        p_list=tuple(values["analysis.p_list"]),
        c_tol=values["tol.c_tol"],
        snapshot_every=values["policy.snapshot_every"],
        output_dir=values["output.dir"],
        jobs=values["jobs"],
        source=dict(raw),
    )

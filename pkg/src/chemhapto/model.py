"""Model parameters, solution state, initial-data presets and derived constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import Field, GridSpec, integrate, sup_norm
from .operators import GradientField, gradient_neumann, laplacian_neumann


class PresetError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    chi: float
    xi: float
    mu: float
    solver_tol: float = 1e-10

    def __post_init__(self):
        for name in ("chi", "xi", "mu"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive number, got {value}")
        if not 0 < self.solver_tol < 1:
            raise ValueError(f"solver_tol must lie in (0, 1), got {self.solver_tol}")


def _zero_gradient(grid: GridSpec) -> GradientField:
    return GradientField(Field.constant(grid, 0.0), Field.constant(grid, 0.0))


@dataclass(frozen=True)
class State:
    """Fields at time ``t`` plus the per-cell time integrals of v, grad v and Lap v.

    ``w0`` is carried along so that the closed form ``w0 * exp(-acc_v)`` can be
    evaluated at any time.
    """

    t: float
    u: Field
    v: Field
    w: Field
    w0: Field
    acc_v: Field
    acc_gv: GradientField
    acc_lv: Field

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def with_time(self, t: float) -> State:
        return replace(self, t=t)


@dataclass(frozen=True)
class DerivedConstants:
    k_const: float
    m_star: float
    w0_sup: float


def initial_state(u0: Field, v0: Field, w0: Field) -> State:
    grid = u0.grid
    if v0.grid != grid or w0.grid != grid:
        raise PresetError("u0, v0, w0 must share one grid")
    if u0.values.min() < 0:
        raise PresetError("u0 must be nonnegative")
    if not np.any(u0.values > 0):
        raise PresetError("u0 must not vanish identically")
    if v0.values.min() < 0:
        raise PresetError("v0 must be nonnegative")
    if w0.values.min() <= 0:
        raise PresetError("w0 must be strictly positive")
    zero = Field.constant(grid, 0.0)
    return State(0.0, u0, v0, w0, w0, zero, _zero_gradient(grid), zero)


def _tissue(grid: GridSpec, tissue: str, w_bar: float) -> Field:
    if tissue == "constant":
        return Field.constant(grid, w_bar)
    if tissue == "cosine":
        return Field.from_function(grid, lambda x, y: w_bar * (1.0 + 0.5 * np.cos(np.pi * x / grid.lx)))
    raise PresetError(f"unknown tissue profile {tissue!r} (use 'constant' or 'cosine')")


PRESET_DEFAULTS: dict[str, dict] = {
    "constant": {"u_bar": 1.0, "v_bar": 1.0, "w_bar": 1.0, "tissue": "constant"},
    "gaussian-bump": {
        "a": 4.0, "sigma": 0.1, "floor": 0.01, "cx": None, "cy": None,
        "v_bar": 0.1, "w_bar": 1.0, "tissue": "constant",
    },
    "cosine-tissue": {"u_bar": 1.0, "v_bar": 0.1, "w_bar": 1.0, "tissue": "cosine"},
    "random": {"u_bar": 1.0, "eps": 0.1, "seed": 42, "v_bar": 0.1, "w_bar": 1.0, "tissue": "constant"},
}


def make_initial_state(grid: GridSpec, preset: str, **params) -> State:
    """Build the t=0 state for a named preset.

    Presets: ``constant`` (u_bar, v_bar, w_bar); ``gaussian-bump`` (a, sigma,
    floor, cx, cy, v_bar); ``cosine-tissue`` (u_bar, v_bar); ``random`` (u_bar,
    eps, seed, v_bar).  Every preset accepts ``w_bar`` and ``tissue``, where
    ``tissue="cosine"`` gives ``w0 = w_bar * (1 + cos(pi x / lx) / 2)``.
    """
    if preset not in PRESET_DEFAULTS:
        raise PresetError(f"unknown preset {preset!r}; choose from {sorted(PRESET_DEFAULTS)}")
    unknown = set(params) - set(PRESET_DEFAULTS[preset])
    if unknown:
        raise PresetError(f"preset {preset!r} does not take {sorted(unknown)}")
    p = {**PRESET_DEFAULTS[preset], **params}
    if p["v_bar"] < 0:
        raise PresetError("v_bar must be nonnegative")
    if p["w_bar"] <= 0:
        raise PresetError("w0 must be strictly positive (w_bar > 0)")
    w0 = _tissue(grid, p["tissue"], p["w_bar"])
    v0 = Field.constant(grid, p["v_bar"])

    if preset in ("constant", "cosine-tissue"):
        u0 = Field.constant(grid, p["u_bar"])
    elif preset == "gaussian-bump":
        if p["sigma"] <= 0 or p["a"] < 0 or p["floor"] < 0:
            raise PresetError("gaussian-bump needs sigma > 0, a >= 0, floor >= 0")
        cx = grid.lx / 2 if p["cx"] is None else p["cx"]
        cy = grid.ly / 2 if p["cy"] is None else p["cy"]
        a, s2, floor = p["a"], p["sigma"] ** 2, p["floor"]
        u0 = Field.from_function(
            grid, lambda x, y: a * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * s2)) + floor
        )
    else:
        if p["eps"] < 0:
            raise PresetError("random preset needs eps >= 0")
        rng = np.random.Generator(np.random.PCG64(int(p["seed"])))
        noise = rng.uniform(-1.0, 1.0, size=grid.shape)
        u0 = Field(grid, np.maximum(p["u_bar"] * (1.0 + p["eps"] * noise), 0.0))
    return initial_state(u0, v0, w0)


def compute_constants(u0: Field, v0: Field, w0: Field) -> DerivedConstants:
    """K from the Laplacian and sqrt-gradient of w0, and the mass ceiling m*.

    Uses the same Neumann stencils as the time stepper so the t=0 pointwise
    estimate on ``-Lap_h w0`` holds exactly on the grid.
    """
    if w0.values.min() <= 0:
        raise ValueError("w0 must be strictly positive")
    w0_sup = sup_norm(w0)
    lap_sup = sup_norm(laplacian_neumann(w0))
    sqrt_grad = gradient_neumann(Field(w0.grid, np.sqrt(w0.values)))
    grad_sup = sup_norm(sqrt_grad.magnitude())
    k_const = lap_sup + 4.0 * grad_sup**2 + w0_sup / math.e
    m_star = max(w0.grid.area, integrate(u0))
    return DerivedConstants(k_const=k_const, m_star=m_star, w0_sup=w0_sup)

"""Manufactured-solution convergence studies for the building blocks of a step.

Each case advances one decoupled equation with the same discrete operators
the full solver uses and compares against a closed-form solution on a
sequence of grids with ``dt`` proportional to ``dx**2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .grid import Field, GridSpec
from .integrator import advance_v, step
from .model import Params, initial_state
from .operators import solve_diffusion_implicit, taxis_array

RESOLUTIONS = (32, 64, 128)
T_FINAL = 0.1
DT_PER_DX2 = 1.0
ADVECTION_DT_PER_DX2 = 0.25


@dataclass(frozen=True)
class ConvergenceResult:
    name: str
    resolutions: tuple
    errors: tuple
    orders: tuple
    threshold: float

    @property
    def ratios(self) -> tuple:
        return tuple(a / b if b > 0 else math.inf for a, b in zip(self.errors, self.errors[1:]))

    @property
    def passed(self) -> bool:
        if all(e == 0.0 for e in self.errors):
            return True
        return all(o >= self.threshold for o in self.orders)


def _orders(errors) -> tuple:
    return tuple(
        math.log2(a / b) if a > 0 and b > 0 else (math.inf if b == 0 else 0.0)
        for a, b in zip(errors, errors[1:])
    )


def _time_grid(dx: float, coeff: float, t_final: float) -> tuple[int, float]:
    n = max(1, math.ceil(t_final / (coeff * dx * dx)))
    return n, t_final / n


def heat_error(n: int, amplitude: float = 1.0, t_final: float = T_FINAL) -> float:
    """Backward-Euler heat equation against ``exp(-pi^2 t) cos(pi x)``."""
    g = GridSpec(n, n)
    X, _ = g.centers()
    u = amplitude * np.cos(np.pi * X)
    steps, dt = _time_grid(g.dx, DT_PER_DX2, t_final)
    for _ in range(steps):
        u = solve_diffusion_implicit(Field(g, u), dt, 1.0, 0.0).values
    exact = amplitude * math.exp(-np.pi**2 * t_final) * np.cos(np.pi * X)
    return float(np.abs(u - exact).max())


def enzyme_error(n: int, amplitude: float = 1.0, t_final: float = T_FINAL) -> float:
    """The v-substep with forcing chosen so ``exp(-t) cos(pi x) cos(pi y)`` is exact.

    With that profile, ``v_t - Lap v + v = 2 pi^2 v``, which enters as the
    source term in place of u.
    """
    g = GridSpec(n, n)
    X, Y = g.centers()
    shape = amplitude * np.cos(np.pi * X) * np.cos(np.pi * Y)
    v = shape.copy()
    steps, dt = _time_grid(g.dx, DT_PER_DX2, t_final)
    for k in range(steps):
        source = 2.0 * np.pi**2 * math.exp(-k * dt) * shape
        v = advance_v(v, source, dt, g)
    exact = math.exp(-t_final) * shape
    return float(np.abs(v - exact).max())


def advection_error(n: int, amplitude: float = 0.5, t_final: float = T_FINAL) -> float:
    """Upwind taxis flux with a frozen potential ``-cos(pi x)/pi``.

    The drift ``sin(pi x)`` vanishes on the walls; the manufactured density
    ``1 + amplitude exp(-t) cos(pi x)`` is sustained by a source term.
    """
    g = GridSpec(n, n)
    X, _ = g.centers()
    potential = -np.cos(np.pi * X) / np.pi
    cx = np.cos(np.pi * X)
    sx = np.sin(np.pi * X)

    def exact(t):
        return 1.0 + amplitude * math.exp(-t) * cx

    def source(t):
        a = amplitude * math.exp(-t)
        # u_t + d/dx(u sin(pi x)), u = 1 + a cos(pi x)
        return -a * cx + np.pi * (cx + a * (cx * cx - sx * sx))

    u = exact(0.0)
    steps, dt = _time_grid(g.dx, ADVECTION_DT_PER_DX2, t_final)
    for k in range(steps):
        u = u + dt * (-taxis_array(u, potential, 1.0, g.dx, g.dy) + source(k * dt))
    return float(np.abs(u - exact(t_final)).max())


CASES = {
    "heat": (heat_error, 1.9),
    "enzyme": (enzyme_error, 1.9),
    "advection": (advection_error, 0.9),
}


def convergence_study(name: str, resolutions=RESOLUTIONS, **kwargs) -> ConvergenceResult:
    func, threshold = CASES[name]
    errors = tuple(func(n, **kwargs) for n in resolutions)
    return ConvergenceResult(name, tuple(resolutions), errors, _orders(errors), threshold)


def run_all(resolutions=RESOLUTIONS) -> list[ConvergenceResult]:
    return [convergence_study(name, resolutions) for name in CASES]


# -- spatially homogeneous trajectories against the kinetic ODE ---------------


def kinetic_oracle(u0: float, v0: float, w0: float, params: Params, t_final: float) -> np.ndarray:
    """High-accuracy solution of u' = mu u (1-u-w), v' = u - v, w' = -v w."""
    mu = params.mu

    def rhs(_, y):
        u, v, w = y
        return [mu * u * (1 - u - w), u - v, -v * w]

    sol = solve_ivp(rhs, (0.0, t_final), [u0, v0, w0], method="DOP853", rtol=1e-12, atol=1e-14)
    return sol.y[:, -1]


def homogeneous_run(u0: float, v0: float, w0: float, params: Params, t_final: float, dt: float, n: int = 4) -> np.ndarray:
    """Run the full stepper on constant data and return the cell-0 values of (u, v, w)."""
    g = GridSpec(n, n)
    state = initial_state(Field.constant(g, u0), Field.constant(g, v0), Field.constant(g, w0))
    steps = round(t_final / dt)
    for _ in range(steps):
        state = step(state, params, dt)
    return np.array([state.u.values[0, 0], state.v.values[0, 0], state.w.values[0, 0]])


def homogeneous_relative_error(dt: float, t_final: float = 5.0, data=(0.5, 0.2, 1.0), params=None) -> np.ndarray:
    params = params or Params(1.0, 1.0, 1.0)
    exact = kinetic_oracle(*data, params, t_final)
    return np.abs(homogeneous_run(*data, params, t_final, dt) - exact) / np.abs(exact)

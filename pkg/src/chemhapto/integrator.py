"""Time stepping for the coupled cell / enzyme / tissue system.

One step updates v (implicit diffusion and decay), then w (exact exponential
decay with a trapezoidal exponent), then u (explicit upwind taxis and logistic
reaction, implicit diffusion), then the time accumulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import ledger
from .grid import Field
from .model import DerivedConstants, Params, State, compute_constants
from .operators import (
    NEGATIVITY_TOL,
    GradientField,
    face_velocities,
    grad_arrays,
    lap_array,
    solve_diffusion_implicit,
    taxis_array,
)

DT_FLOOR = 1e-12
MERGE_FRACTION = 1e-6


class PositivityError(RuntimeError):
    pass


class CFLError(RuntimeError):
    pass


class InvariantError(AssertionError):
    pass


class StepError(RuntimeError):
    """A failure inside ``run``, annotated with the step index and time."""

    def __init__(self, step_index: int, t: float, cause: Exception):
        super().__init__(f"step {step_index} at t={t!r}: {type(cause).__name__}: {cause}")
        self.step_index = step_index
        self.t = t
        self.cause = cause


@dataclass(frozen=True)
class StepPolicy:
    dt_max: float
    cfl_safety: float = 0.25
    t_end: float = 1.0
    record_every: float = 0.1

    def __post_init__(self):
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max}")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not self.t_end >= 0:
            raise ValueError(f"t_end must be nonnegative, got {self.t_end}")
        if not self.record_every > 0:
            raise ValueError(f"record_every must be positive, got {self.record_every}")


def max_face_speed(v: np.ndarray, w: np.ndarray, params: Params, dx: float, dy: float) -> float:
    """Largest combined chemotactic plus haptotactic drift speed over interior faces."""
    cvx, cvy = face_velocities(v, params.chi, dx, dy)
    hwx, hwy = face_velocities(w, params.xi, dx, dy)
    sx = np.abs(cvx) + np.abs(hwx)
    sy = np.abs(cvy) + np.abs(hwy)
    return float(max(sx.max(), sy.max()))


def _dt_limits(u, v, w, params: Params, dx: float, dy: float) -> tuple[float, float]:
    speed = max_face_speed(v, w, params, dx, dy)
    advective = math.inf if speed == 0.0 else min(dx, dy) / (2.0 * speed)
    reaction = 1.0 / (params.mu * (1.0 + np.abs(u).max() + np.abs(w).max()))
    return advective, reaction


def stable_dt(state: State, params: Params, policy: StepPolicy) -> float:
    g = state.grid
    advective, reaction = _dt_limits(state.u.values, state.v.values, state.w.values, params, g.dx, g.dy)
    dt = policy.cfl_safety * min(policy.dt_max, advective, reaction)
    return max(dt, DT_FLOOR)


def _first_negative(a: np.ndarray) -> tuple[int, int, float]:
    j, i = np.unravel_index(np.argmin(a), a.shape)
    return int(i), int(j), float(a[j, i])


def advance_v(v: np.ndarray, u: np.ndarray, dt: float, grid, tol: float = 1e-10) -> np.ndarray:
    """Implicit diffusion and decay with an explicit source: ``(1 + dt - dt Lap_h) v' = v + dt u``."""
    return solve_diffusion_implicit(Field(grid, v + dt * u), dt, 1.0, 1.0, tol=tol).values


def advance_w(w: np.ndarray, v_old: np.ndarray, v_new: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact decay ``w' = w exp(-int v)`` with the trapezoidal exponent; returns ``(w', exponent)``."""
    exponent = 0.5 * dt * (v_old + v_new)
    return w * np.exp(-exponent), exponent


def step(state: State, params: Params, dt: float) -> State:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    g = state.grid
    dx, dy = g.dx, g.dy
    u, v, w = state.u.values, state.v.values, state.w.values

    v_new = advance_v(v, u, dt, g, params.solver_tol)
    if v_new.min() < -NEGATIVITY_TOL:
        i, j, val = _first_negative(v_new)
        raise PositivityError(f"v became negative ({val:.3e}) at cell (i={i}, j={j})")
    v_new = np.maximum(v_new, 0.0)

    w_new, exponent = advance_w(w, v, v_new, dt)
    if not (w_new.min() > 0.0 and np.all(w_new <= w)):
        raise InvariantError("tissue update violated 0 < w_new <= w")

    advective, reaction = _dt_limits(u, v_new, w_new, params, dx, dy)
    if dt > min(advective, reaction) * (1.0 + 2 * MERGE_FRACTION):
        raise CFLError(
            f"dt={dt!r} exceeds stability limit (advective {advective!r}, reaction {reaction!r})"
        )

    rhs = u + dt * (
        -taxis_array(u, v_new, params.chi, dx, dy)
        - taxis_array(u, w_new, params.xi, dx, dy)
        + params.mu * u * (1.0 - u - w_new)
    )
    u_new = solve_diffusion_implicit(Field(g, rhs), dt, 1.0, 0.0, tol=params.solver_tol).values
    if u_new.min() < -NEGATIVITY_TOL:
        i, j, val = _first_negative(u_new)
        raise PositivityError(f"u became negative ({val:.3e}) at cell (i={i}, j={j})")
    u_new = np.maximum(u_new, 0.0)

    gx0, gy0 = grad_arrays(v, dx, dy)
    gx1, gy1 = grad_arrays(v_new, dx, dy)
    half = 0.5 * dt
    acc_gv = GradientField(
        Field(g, state.acc_gv.gx.values + half * (gx0 + gx1)),
        Field(g, state.acc_gv.gy.values + half * (gy0 + gy1)),
    )
    acc_lv = Field(g, state.acc_lv.values + half * (lap_array(v, dx, dy) + lap_array(v_new, dx, dy)))
    return State(
        t=state.t + dt,
        u=Field(g, u_new),
        v=Field(g, v_new),
        w=Field(g, w_new),
        w0=state.w0,
        acc_v=Field(g, state.acc_v.values + exponent),
        acc_gv=acc_gv,
        acc_lv=acc_lv,
    )


def _record_index(t: float, record_every: float) -> int:
    """Index of the last record time ``k * record_every`` at or before ``t``."""
    return int(math.floor(t / record_every + 1e-9))


def run(
    initial: State,
    params: Params,
    policy: StepPolicy,
    sink=None,
    consts: DerivedConstants | None = None,
    p_list=(2.0, 3.0),
    on_step=None,
) -> State:
    """Advance ``initial`` to ``policy.t_end``, emitting ledger records on a fixed time grid.

    Records are taken at the start, at every multiple of ``record_every`` and at
    ``t_end``; each is passed to ``sink(record, state)``.  Steps are shortened
    so that record times are hit exactly.  ``on_step(prev, state)``, if given,
    sees every accepted step.
    """
    if consts is None:
        consts = compute_constants(initial.u, initial.v, initial.w0)

    def emit(state, prev):
        if sink is not None:
            sink(ledger(state, consts, params, p_list, prev=prev), state)

    state, prev = initial, None
    emit(state, prev)
    t_end = policy.t_end
    k = _record_index(state.t, policy.record_every) + 1
    n = 0
    while state.t < t_end:
        target = min(round(k * policy.record_every, 12), t_end)
        dt = stable_dt(state, params, policy)
        # remainders below 1e-6 dt are rounding noise; fold them into this step
        hit = state.t + dt * (1.0 + MERGE_FRACTION) >= target
        if hit:
            dt = target - state.t
        try:
            new = step(state, params, dt)
        except Exception as exc:
            raise StepError(n, state.t, exc) from exc
        n += 1
        if hit:
            new = new.with_time(target)
        prev, state = state, new
        if on_step is not None:
            on_step(prev, state)
        if hit:
            emit(state, prev)
            k += 1
    return state

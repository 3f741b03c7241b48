"""Finite-volume simulator for the chemotaxis-haptotaxis system with logistic source.

    u_t = Lap u - chi div(u grad v) - xi div(u grad w) + mu u (1 - u - w)
    v_t = Lap v - v + u
    w_t = -v w

on a rectangle with zero-flux boundaries, plus a harness that evaluates the
system's a-priori estimates along computed trajectories.
"""

from .grid import Field, GridSpec, integrate, lp_integral, sup_norm
from .integrator import StepPolicy, run, stable_dt, step
from .model import DerivedConstants, Params, State, compute_constants, make_initial_state

__all__ = [
    "DerivedConstants", "Field", "GridSpec", "Params", "State", "StepPolicy",
    "compute_constants", "integrate", "lp_integral", "make_initial_state",
    "run", "stable_dt", "step", "sup_norm",
]

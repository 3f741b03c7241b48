"""Self-verification suite: operator exactness, convergence orders and oracles."""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from unittest import mock

import numpy as np

from . import mms, operators
from .analysis import phi, pointwise_residual_field, scalar_bound_L
from .grid import Field, GridSpec, integrate, sup_norm
from .model import PRESET_DEFAULTS, compute_constants, make_initial_state
from .operators import gradient_neumann, laplacian_neumann, solve_diffusion_implicit, taxis_divergence


@dataclass(frozen=True)
class Check:
    name: str
    measured: str
    expected: str
    passed: bool


def _seeded(seed: int, shape):
    return np.random.Generator(np.random.PCG64(seed)).uniform(0.0, 1.0, size=shape)


def check_operators() -> list[Check]:
    g = GridSpec(32, 32)
    out = []
    lap_q = laplacian_neumann(Field.from_function(g, lambda x, y: x**2)).values[:, 1:-1]
    err = float(np.abs(lap_q - 2.0).max())
    out.append(Check("laplacian exact on x^2 (interior)", f"{err:.3e}", "<= 1e-9", err <= 1e-9))

    f = Field(g, _seeded(1, g.shape))
    div = abs(integrate(laplacian_neumann(f)))
    out.append(Check("laplacian discrete divergence theorem", f"{div:.3e}", "<= 1e-11", div <= 1e-11 * sup_norm(f)))

    gy = gradient_neumann(Field.from_function(g, lambda x, y: y)).gy.values[1:-1, :]
    err = float(np.abs(gy - 1.0).max())
    out.append(Check("gradient exact on y (interior)", f"{err:.3e}", "<= 1e-12", err <= 1e-12))

    u = Field(g, _seeded(2, g.shape))
    pot = Field(g, _seeded(3, g.shape))
    total = abs(float(taxis_divergence(u, pot, 1.7).values.sum()))
    out.append(Check("taxis flux conservation", f"{total:.3e}", "<= 1e-10", total <= 1e-10))
    return out


def check_solver() -> list[Check]:
    out = []
    rhs = Field(GridSpec(16, 16), _seeded(4, (16, 16)))
    sol = solve_diffusion_implicit(rhs, 0.05, 1.0, 1.0)
    fwd = (1.05) * sol.values - 0.05 * laplacian_neumann(sol).values
    rel = float(np.linalg.norm(fwd - rhs.values) / np.linalg.norm(rhs.values))
    out.append(Check("implicit solve recovers rhs", f"{rel:.3e}", "<= 1e-9", rel <= 1e-9))
    return out


def check_mms() -> list[Check]:
    out = []
    for res in mms.run_all():
        orders = ", ".join(f"{o:.3f}" for o in res.orders)
        out.append(Check(f"MMS {res.name} spatial order", orders, f">= {res.threshold}", res.passed))
    return out


def check_kinetic_oracle() -> list[Check]:
    e1 = mms.homogeneous_relative_error(1e-3)
    e2 = mms.homogeneous_relative_error(5e-4)
    order = float(np.log2(e1.max() / e2.max()))
    return [
        Check("homogeneous run vs ODE oracle, dt=1e-3", f"{e1.max():.3e}", "<= 1e-3", bool(e1.max() <= 1e-3)),
        Check("homogeneous run temporal order", f"{order:.3f}", ">= 0.9", order >= 0.9),
    ]


def check_scalar_bound(n_samples: int = 10**6) -> list[Check]:
    out = []
    for mu, a in ((1.0, 0.0), (0.5, 2.0)):
        L, z_star = scalar_bound_L(mu, a)
        # quasi-random (golden-ratio) samples on (0, 10 z* + 10]
        hi = 10.0 * z_star + 10.0
        z = hi * ((np.arange(1, n_samples + 1) * 0.6180339887498949) % 1.0)
        z = z[z > 0]
        excess = float(np.max(phi(z, mu, a)) - L)
        ok = excess <= 1e-9 and L >= float(phi(1.0, mu, a))
        out.append(Check(f"scalar bound mu={mu}, A={a}", f"L={L:.10f}, max excess {excess:.2e}", "phi <= L + 1e-9", ok))
    return out


def check_initial_pointwise() -> list[Check]:
    out = []
    for n in (64, 128):
        g = GridSpec(n, n)
        worst = -np.inf
        for preset in PRESET_DEFAULTS:
            for tissue in ("constant", "cosine"):
                s = make_initial_state(g, preset, tissue=tissue)
                c = compute_constants(s.u, s.v, s.w0)
                worst = max(worst, float(pointwise_residual_field(s, c).max()))
        out.append(Check(f"t=0 pointwise estimate, {n}x{n}", f"{worst:.3e}", "<= 1e-12", worst <= 1e-12))
    return out


@contextlib.contextmanager
def broken_stencil():
    """Test hook: perturb the Laplacian stencil so the suite must fail."""
    original = operators.lap_array
    with mock.patch.object(operators, "lap_array", lambda a, dx, dy: original(a, dx, dy) * 1.01 + 1e-3):
        yield


def run_checks(break_stencil: bool = False) -> list[Check]:
    ctx = broken_stencil() if break_stencil else contextlib.nullcontext()
    groups = [
        ("operators", check_operators),
        ("implicit solve", check_solver),
        ("t=0 pointwise estimate", check_initial_pointwise),
        ("scalar bound", check_scalar_bound),
        ("MMS", check_mms),
        ("ODE oracle", check_kinetic_oracle),
    ]
    checks = []
    with ctx:
        for label, group in groups:
            try:
                checks += group()
            except Exception as exc:  # a broken kernel may stop a solver outright
                checks.append(Check(f"{label} (aborted)", type(exc).__name__, "no error", False))
    return checks


def format_table(checks) -> str:
    w_name = max(len(c.name) for c in checks)
    w_meas = max(len(c.measured) for c in checks)
    lines = [f"{'check':<{w_name}}  {'measured':<{w_meas}}  expected  result"]
    for c in checks:
        lines.append(f"{c.name:<{w_name}}  {c.measured:<{w_meas}}  {c.expected}  {'PASS' if c.passed else 'FAIL'}")
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(lines)

"""Monitored functionals, inequality residuals and boundedness verdicts.

Every quantity is a grid quadrature of the current state.  The continuum
estimates checked here need not hold exactly on a grid, so violations are
reported as signed residuals (positive means violated) rather than asserted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, integrate, lp_integral, sup_norm
from .model import DerivedConstants, Params, State
from .operators import grad_arrays, lap_array

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

LEDGER_COLUMNS = (
    "t", "mass", "entropy", "grad_v_l2", "u_l2", "grad_v_l4", "u_sup", "v_sup",
    "grad_v_sup", "w_sup", "pointwise_residual", "mass_slack",
    "u_lp_2", "u_lp_3", "energy_res_2", "energy_res_3",
)

BOUNDEDNESS_QUANTITIES = (
    "u_sup", "v_sup", "grad_v_sup", "mass", "entropy", "u_l2",
    "grad_v_l2", "grad_v_l4", "u_lp_2", "u_lp_3",
)


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class LedgerRecord:
    t: float
    mass: float
    entropy: float
    grad_v_l2: float
    u_l2: float
    grad_v_l4: float
    u_sup: float
    v_sup: float
    grad_v_sup: float
    w_sup: float
    pointwise_residual: float
    mass_slack: float
    u_lp: dict = field(default_factory=dict)
    energy_residuals: dict = field(default_factory=dict)
    # sup |w - w0 exp(-acc_v)|; not part of the CSV layout
    closed_form_gap: float = 0.0

    def get(self, name: str) -> float:
        if name.startswith("u_lp_"):
            return self.u_lp[float(name[5:])]
        if name.startswith("energy_res_"):
            return self.energy_residuals[float(name[11:])]
        return getattr(self, name)

    def csv_row(self) -> list[str]:
        return [repr(float(self.get(c))) if self._has(c) else "nan" for c in LEDGER_COLUMNS]

    def _has(self, name: str) -> bool:
        try:
            self.get(name)
        except KeyError:
            return False
        return True


@dataclass(frozen=True)
class Verdict:
    name: str
    sup: float
    first_half_sup: float
    second_half_sup: float
    bounded: bool


def entropy_integral(u: Field) -> float:
    a = u.values
    safe = np.where(a > 0, a, 1.0)
    return float(np.sum(np.where(a > 0, a * np.log(safe), 0.0)) * u.grid.cell_area)


def closed_form_w(state: State) -> np.ndarray:
    return state.w0.values * np.exp(-state.acc_v.values)


def pointwise_residual_field(state: State, consts: DerivedConstants) -> np.ndarray:
    """``-Lap_h w - ||w0||_inf v - K`` per cell, with w taken in closed form."""
    g = state.grid
    w = closed_form_w(state)
    return -lap_array(w, g.dx, g.dy) - consts.w0_sup * state.v.values - consts.k_const


def minus_laplacian_w_representation(state: State) -> np.ndarray:
    """``-Lap w`` assembled from w0 and the accumulated integrals of v, grad v, Lap v.

    Mirrors the continuum representation formula; on a grid it agrees with
    ``-Lap_h w`` only up to discretization error.
    """
    g = state.grid
    w0 = state.w0.values
    decay = np.exp(-state.acc_v.values)
    gx0, gy0 = grad_arrays(w0, g.dx, g.dy)
    ax, ay = state.acc_gv.gx.values, state.acc_gv.gy.values
    return decay * (
        -lap_array(w0, g.dx, g.dy)
        + 2.0 * (gx0 * ax + gy0 * ay)
        - w0 * (ax**2 + ay**2)
        + w0 * state.acc_lv.values
    )


def energy_residual(prev: State, nxt: State, p: float, params: Params, consts: DerivedConstants) -> float:
    """Signed residual of the L^p energy inequality over one step (positive = violated).

    Spatial terms are evaluated at the later state; the time derivative is the
    forward difference over ``nxt.t - prev.t``.
    """
    if p <= 1:
        raise AnalysisError(f"p must exceed 1, got {p}")
    dt = nxt.t - prev.t
    if not dt > 0:
        raise AnalysisError(f"records must be strictly increasing in time (dt={dt!r})")
    g = nxt.grid
    area = g.cell_area
    u = nxt.u.values
    v = nxt.v.values
    up = np.power(u, p)
    ugx, ugy = grad_arrays(u, g.dx, g.dy)
    vgx, vgy = grad_arrays(v, g.dx, g.dy)
    grad_u2 = ugx**2 + ugy**2
    grad_v2 = vgx**2 + vgy**2
    if p >= 2:
        weight = np.power(u, p - 2)
    else:
        weight = np.where(u > 0, np.power(np.where(u > 0, u, 1.0), p - 2), 0.0)

    lhs = (np.sum(up) - np.sum(np.power(prev.u.values, p))) * area / (p * dt)
    lhs += 0.5 * (p - 1) * np.sum(weight * grad_u2) * area
    rhs = 0.5 * (p - 1) * params.chi**2 * np.sum(up * grad_v2) * area
    rhs += params.xi * consts.w0_sup * np.sum(up * v) * area
    rhs += (params.mu + params.xi * consts.k_const) * np.sum(up) * area
    rhs -= params.mu * np.sum(up * u) * area
    return float(lhs - rhs)


def ledger(state: State, consts: DerivedConstants, params: Params, p_list=(2.0, 3.0), prev: State | None = None) -> LedgerRecord:
    """Evaluate every monitored functional on ``state``.

    Energy residuals need the preceding step; without ``prev`` (the first
    record of a run) they are reported as 0.
    """
    g = state.grid
    area = g.cell_area
    u, v = state.u, state.v
    vgx, vgy = grad_arrays(v.values, g.dx, g.dy)
    gv2 = vgx**2 + vgy**2
    mass = integrate(u)
    pw = pointwise_residual_field(state, consts)
    energy = {}
    for p in p_list:
        energy[float(p)] = 0.0 if prev is None else energy_residual(prev, state, p, params, consts)
    rec = LedgerRecord(
        t=float(state.t),
        mass=mass,
        entropy=entropy_integral(u),
        grad_v_l2=float(np.sum(gv2) * area),
        u_l2=lp_integral(u, 2),
        grad_v_l4=float(np.sum(gv2 * gv2) * area),
        u_sup=sup_norm(u),
        v_sup=sup_norm(v),
        grad_v_sup=float(np.sqrt(gv2.max())),
        w_sup=sup_norm(state.w),
        pointwise_residual=float(pw.max()),
        mass_slack=consts.m_star - mass,
        u_lp={float(p): lp_integral(u, p) for p in p_list},
        energy_residuals=energy,
        closed_form_gap=float(np.abs(state.w.values - closed_form_w(state)).max()),
    )
    for name in LEDGER_COLUMNS:
        if rec._has(name) and not math.isfinite(rec.get(name)):
            raise AnalysisError(f"non-finite functional {name} at t={state.t!r}")
    return rec


def write_ledger_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        for rec in records:
            writer.writerow(rec.csv_row())


def read_ledger_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: float(x) for k, x in row.items()} for row in csv.DictReader(fh)]


# -- scalar bound for (1+mu) z ln z + A z^2 - mu z^2 ln z --------------------


def phi(z, mu: float, a_coeff: float):
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        lz = np.log(z)
        val = (1.0 + mu) * z * lz + a_coeff * z * z - mu * z * z * lz
    return np.where(z > 0, val, 0.0)


def _decay_cutoff(mu: float, a_coeff: float) -> float:
    """A point beyond which phi is negative and decreasing.

    Using ln z <= z and ln z + 1 <= z, both phi(z) / z^2 and phi'(z) / z are
    bounded by ``1 + mu + 2|A| - mu ln z``, which is negative past the cutoff.
    """
    return max(math.e, math.exp((1.0 + mu + 2.0 * abs(a_coeff)) / mu + 1.0))


def scalar_bound_L(mu: float, a_coeff: float, n_scan: int = 4001, xtol: float = 1e-10) -> tuple[float, float]:
    """Maximize phi over z > 0 by a log-spaced scan followed by golden-section refinement.

    Returns ``(L, z_star)`` with ``L = max(phi(z_star), 0)``; phi extends
    continuously to 0 at z = 0.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    z_hi = _decay_cutoff(mu, a_coeff)
    zs = np.geomspace(1e-9, z_hi, n_scan)
    vals = phi(zs, mu, a_coeff)
    k = int(np.argmax(vals))
    lo = zs[max(k - 1, 0)]
    hi = zs[min(k + 1, n_scan - 1)]
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = float(phi(c, mu, a_coeff)), float(phi(d, mu, a_coeff))
    while hi - lo > xtol * max(1.0, abs(lo)):
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = float(phi(c, mu, a_coeff))
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = float(phi(d, mu, a_coeff))
    candidates = [(float(vals[k]), float(zs[k])), (fc, c), (fd, d)]
    best_val, z_star = max(candidates)
    return max(best_val, 0.0), z_star


# -- verdicts -------------------------------------------------------------


def no_growth(first: float, second: float, rel: float = 0.05) -> bool:
    """True when ``second`` exceeds ``first`` by at most ``rel * |first|``."""
    return second <= first + rel * abs(first)


def verdicts(records, m_star: float | None = None, tol_pw: float | None = None, scale_pw=None,
             quantities=BOUNDEDNESS_QUANTITIES) -> list[Verdict]:
    """Split the horizon in half and compare suprema of each monitored quantity.

    With ``m_star`` a ``mass_bound`` verdict checks every record against the
    mass ceiling.  With ``tol_pw`` a ``pointwise_estimate`` verdict checks the
    pointwise residual against ``tol_pw`` times ``scale_pw(record)`` (or 1).
    """
    records = list(records)
    if len(records) < 4:
        raise AnalysisError(f"need at least 4 records, got {len(records)}")
    t0, t1 = records[0].t, records[-1].t
    t_mid = 0.5 * (t0 + t1)
    first = [r for r in records if r.t <= t_mid]
    second = [r for r in records if r.t > t_mid]
    out = []
    for name in quantities:
        a = max(r.get(name) for r in first)
        b = max(r.get(name) for r in second)
        out.append(Verdict(name, max(a, b), a, b, no_growth(a, b)))
    if m_star is not None:
        worst = max(r.mass for r in records)
        out.append(Verdict("mass_bound", worst, max(r.mass for r in first), max(r.mass for r in second),
                           all(r.mass <= m_star * (1 + 1e-6) for r in records)))
    if tol_pw is not None:
        ratios = [r.pointwise_residual / (scale_pw(r) if scale_pw else 1.0) for r in records]
        half = len(first)
        out.append(Verdict("pointwise_estimate", max(ratios), max(ratios[:half]), max(ratios[half:]),
                           all(x <= tol_pw for x in ratios)))
    return out

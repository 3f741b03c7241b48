"""Run a configured simulation into an output directory."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

from .analysis import LEDGER_COLUMNS, Verdict, verdicts
from .config import RunConfig
from .grid import write_snapshot
from .integrator import run
from .model import compute_constants, make_initial_state

log = logging.getLogger(__name__)

CLOSED_FORM_TOL = 1e-12


class OutputCollision(RuntimeError):
    pass


@dataclass
class RunSummary:
    out_dir: Path
    status: str
    final_u_sup: float
    max_u_sup: float
    all_bounded: bool | None
    records: list
    message: str = ""


def claim_output_dir(path: Path) -> Path:
    path = Path(path)
    if path.exists() and (not path.is_dir() or any(path.iterdir())):
        raise OutputCollision(f"output directory {path} already exists and is not empty")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _fmt(x) -> str:
    return repr(float(x))


def pointwise_tolerance(config: RunConfig) -> float:
    h = max(config.grid.dx, config.grid.dy)
    return config.c_tol * h * h


def evaluate_verdicts(records, consts, config: RunConfig):
    """Boundedness verdicts plus the per-record mass, pointwise and closed-form checks."""
    out = verdicts(
        records,
        m_star=consts.m_star,
        tol_pw=pointwise_tolerance(config),
        scale_pw=lambda r: consts.w0_sup * r.v_sup + consts.k_const,
    )
    gaps = [r.closed_form_gap for r in records]
    half = len([r for r in records if r.t <= 0.5 * (records[0].t + records[-1].t)])
    out.append(Verdict("closed_form_w", max(gaps), max(gaps[:half]), max(gaps[half:]),
                       all(g <= CLOSED_FORM_TOL * consts.w0_sup for g in gaps)))
    return out


def write_verdicts(path: Path, results) -> None:
    lines = ["name,sup,first_half_sup,second_half_sup,bounded"]
    for v in results:
        lines.append(f"{v.name},{_fmt(v.sup)},{_fmt(v.first_half_sup)},{_fmt(v.second_half_sup)},{str(v.bounded).lower()}")
    path.write_text("\n".join(lines) + "\n")


def run_to_directory(config: RunConfig, out_dir=None) -> RunSummary:
    """Simulate ``config`` and write ledger, snapshots, constants and verdicts.

    Simulation failures are reported in the returned summary (status
    ``"failed"``) after everything produced so far has been written.
    """
    out = claim_output_dir(out_dir if out_dir is not None else config.resolved_output_dir())
    state = make_initial_state(config.grid, config.preset, **config.preset_params)
    consts = compute_constants(state.u, state.v, state.w0)
    g = config.grid
    (out / "constants.txt").write_text(
        f"k_const = {_fmt(consts.k_const)}\n"
        f"m_star = {_fmt(consts.m_star)}\n"
        f"w0_sup = {_fmt(consts.w0_sup)}\n"
        f"grid = {g.nx} {g.ny} {_fmt(g.lx)} {_fmt(g.ly)}\n"
        f"preset = {config.preset}\n"
        f"seed = {config.seed if config.seed is not None else 'none'}\n"
    )

    records = []
    snap_every = config.snapshot_every
    t_end = config.policy.t_end
    next_snap = [0]

    with open(out / "ledger.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)

        def sink(rec, st):
            writer.writerow(rec.csv_row())
            fh.flush()
            records.append(rec)
            target = next_snap[0] * snap_every
            if st.t >= target - 1e-9 * max(1.0, target) or st.t >= t_end:
                for name in ("u", "v", "w"):
                    write_snapshot(out / f"{name}_{st.t:.4f}.dat", getattr(st, name), st.t)
                while next_snap[0] * snap_every <= st.t + 1e-9 * max(1.0, st.t):
                    next_snap[0] += 1

        status, message = "ok", ""
        try:
            run(state, config.params, config.policy, sink=sink, consts=consts, p_list=config.p_list)
        except Exception as exc:  # solver, positivity, CFL or invariant failure
            status, message = "failed", str(exc)
            log.error("run failed: %s", exc)
            (out / "failure.txt").write_text(message + "\n")

    all_bounded = None
    if len(records) >= 4:
        results = evaluate_verdicts(records, consts, config)
        write_verdicts(out / "verdicts.txt", results)
        all_bounded = all(v.bounded for v in results)
    else:
        (out / "verdicts.txt").write_text(f"insufficient records for verdicts ({len(records)} < 4)\n")
    u_sups = [r.u_sup for r in records]
    return RunSummary(
        out_dir=out,
        status=status,
        final_u_sup=u_sups[-1] if u_sups else float("nan"),
        max_u_sup=max(u_sups) if u_sups else float("nan"),
        all_bounded=all_bounded,
        records=records,
        message=message,
    )

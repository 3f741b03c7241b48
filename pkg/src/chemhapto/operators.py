"""Discrete operators under homogeneous Neumann (zero-flux) boundary conditions.

Boundary handling is by mirror ghost cells: the ghost value outside a boundary
cell equals the boundary cell itself, so every boundary face carries a zero
difference and therefore zero diffusive flux.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft

from .grid import Field, GridSpec

NEGATIVITY_TOL = 1e-12


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class GradientField:
    gx: Field
    gy: Field

    @property
    def grid(self) -> GridSpec:
        return self.gx.grid

    def magnitude(self) -> Field:
        return Field(self.grid, np.hypot(self.gx.values, self.gy.values))

    def squared_magnitude(self) -> np.ndarray:
        return self.gx.values**2 + self.gy.values**2


# -- array kernels (shape (ny, nx); x along axis 1) ------------------------


def lap_array(a: np.ndarray, dx: float, dy: float) -> np.ndarray:
    out = np.zeros_like(a)
    fx = np.diff(a, axis=1) / (dx * dx)
    out[:, :-1] += fx
    out[:, 1:] -= fx
    fy = np.diff(a, axis=0) / (dy * dy)
    out[:-1, :] += fy
    out[1:, :] -= fy
    return out


def grad_arrays(a: np.ndarray, dx: float, dy: float) -> tuple[np.ndarray, np.ndarray]:
    gx = np.empty_like(a)
    gx[:, 1:-1] = a[:, 2:] - a[:, :-2]
    gx[:, 0] = a[:, 1] - a[:, 0]
    gx[:, -1] = a[:, -1] - a[:, -2]
    gx /= 2.0 * dx
    gy = np.empty_like(a)
    gy[1:-1, :] = a[2:, :] - a[:-2, :]
    gy[0, :] = a[1, :] - a[0, :]
    gy[-1, :] = a[-1, :] - a[-2, :]
    gy /= 2.0 * dy
    return gx, gy


def face_velocities(phi: np.ndarray, coeff: float, dx: float, dy: float):
    """Drift velocities ``coeff * dphi/dn`` on interior x-faces and y-faces."""
    return coeff * np.diff(phi, axis=1) / dx, coeff * np.diff(phi, axis=0) / dy


def taxis_array(u: np.ndarray, phi: np.ndarray, coeff: float, dx: float, dy: float) -> np.ndarray:
    vx, vy = face_velocities(phi, coeff, dx, dy)
    out = np.zeros_like(u)
    fx = vx * np.where(vx > 0, u[:, :-1], u[:, 1:]) / dx
    out[:, :-1] += fx
    out[:, 1:] -= fx
    fy = vy * np.where(vy > 0, u[:-1, :], u[1:, :]) / dy
    out[:-1, :] += fy
    out[1:, :] -= fy
    return out


def neumann_eigenvalues(grid: GridSpec) -> np.ndarray:
    """Eigenvalues of the mirror-ghost Laplacian on the DCT-II basis, shape (ny, nx)."""
    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny)
    lx = -4.0 / grid.dx**2 * np.sin(np.pi * kx / (2 * grid.nx)) ** 2
    ly = -4.0 / grid.dy**2 * np.sin(np.pi * ky / (2 * grid.ny)) ** 2
    return ly[:, None] + lx[None, :]


def cg_solve(apply_a, b: np.ndarray, x0=None, tol=1e-10, maxiter=5000, precond=None):
    """Preconditioned conjugate gradients for a symmetric positive-definite operator.

    Stops once ``||b - A x|| <= tol * ||b||``.  Returns ``(x, iterations, relres)``.
    """
    bnorm = np.sqrt(np.vdot(b, b).real)
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    x = b.copy() if x0 is None else x0.copy()
    r = b - apply_a(x)
    relres = np.sqrt(np.vdot(r, r).real) / bnorm
    if relres <= tol:
        return x, 0, relres
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = np.vdot(r, z).real
    for it in range(1, maxiter + 1):
        ap = apply_a(p)
        alpha = rz / np.vdot(p, ap).real
        x += alpha * p
        r -= alpha * ap
        relres = np.sqrt(np.vdot(r, r).real) / bnorm
        if relres <= tol:
            return x, it, relres
        z = precond(r) if precond is not None else r
        rz_new = np.vdot(r, z).real
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise SolverError("conjugate gradient did not converge", relres, maxiter)


# -- Field-level operators ----------------------------------------------------


def laplacian_neumann(f: Field) -> Field:
    g = f.grid
    return Field(g, lap_array(f.values, g.dx, g.dy))


def gradient_neumann(f: Field) -> GradientField:
    g = f.grid
    gx, gy = grad_arrays(f.values, g.dx, g.dy)
    return GradientField(Field(g, gx), Field(g, gy))


def taxis_divergence(u: Field, potential: Field, coeff: float) -> Field:
    """Discrete ``coeff * div(u grad(potential))`` in upwind conservative flux form.

    Only interior faces carry flux, so the result always sums to zero.
    """
    umin = u.values.min()
    if umin < -NEGATIVITY_TOL:
        raise ValueError(f"taxis_divergence requires u >= 0, found {umin:.3e}")
    g = u.grid
    return Field(g, taxis_array(u.values, potential.values, coeff, g.dx, g.dy))


def solve_diffusion_implicit(
    rhs: Field,
    dt: float,
    kappa: float,
    mass_coeff: float = 0.0,
    tol: float = 1e-10,
    preconditioner: str = "spectral",
    maxiter: int = 5000,
) -> Field:
    """Solve ``(1 + dt*mass_coeff) f - dt*kappa*Lap_h f = rhs`` by conjugate gradients.

    The default preconditioner inverts the operator in the cosine basis, which is
    exact on a uniform grid, so CG typically stops after one iteration;
    ``preconditioner="none"`` runs plain CG.
    """
    if dt <= 0 or kappa < 0 or mass_coeff < 0:
        raise ValueError(f"need dt > 0, kappa >= 0, mass_coeff >= 0 (got {dt}, {kappa}, {mass_coeff})")
    g = rhs.grid
    diag = 1.0 + dt * mass_coeff
    b = np.array(rhs.values)
    if kappa == 0.0:
        return Field(g, b / diag)
    dx, dy = g.dx, g.dy

    def apply_a(x):
        return diag * x - (dt * kappa) * lap_array(x, dx, dy)

    precond = None
    if preconditioner == "spectral":
        symbol = diag - dt * kappa * neumann_eigenvalues(g)

        def precond(r):
            return fft.idctn(fft.dctn(r, type=2, norm="ortho") / symbol, type=2, norm="ortho")

    elif preconditioner != "none":
        raise ValueError(f"unknown preconditioner {preconditioner!r}")
    x0 = precond(b) if precond is not None else b / diag
    x, _, _ = cg_solve(apply_a, b, x0=x0, tol=tol, maxiter=maxiter, precond=precond)
    return Field(g, x)

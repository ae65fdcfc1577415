"""Generators, Kolmogorov equations and densities for scalar diffusions.

For ``dX = f(X) dt + g(X) dW`` the generator and its formal adjoint are

    L u   = f u' + (1/2) D u''              with D = g^2,
    L* rho = (1/2) (D rho)'' - (f rho)',

acting on functions sampled on a uniform spatial grid.  The module solves
the backward equation ``du/dt = L u`` and the Fokker-Planck equation
``drho/dt = L* rho`` with a theta time scheme (backward Euler by default,
explicit Euler with an up-front CFL check on request), provides the
closed-form heat kernels for free, reflected and killed Brownian motion,
the stationary density ``exp(-U)/Z`` of gradient systems, and Monte Carlo
estimators for the semigroup and for Feynman-Kac functionals that serve as
independent cross-checks of the PDE routes.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .sde import GaussianStream, SdeModel, TimeGrid, euler_maruyama_ensemble

__all__ = [
    "Grid1D",
    "DensityField",
    "BoundaryCondition",
    "CflError",
    "apply_generator",
    "apply_adjoint_generator",
    "solve_backward_kolmogorov",
    "solve_fokker_planck",
    "delta_field",
    "stationary_density_gradient",
    "free_bm_density",
    "reflected_bm_density",
    "killed_bm_density",
    "mc_semigroup",
    "mc_feynman_kac",
]


class CflError(ValueError):
    """Explicit time step too large for the spatial grid.

    Carries the offending step ``dt`` and the stability bound ``dt_max =
    dx^2 / max(D)``; raised before any stepping is performed.
    """

    def __init__(self, dt: float, dt_max: float):
        self.dt = dt
        self.dt_max = dt_max
        super().__init__(
            f"explicit step dt={dt:g} violates the CFL bound dt <= dx^2/max(g g^T) "
            f"= {dt_max:g}; reduce dt or use the implicit scheme"
        )


class BoundaryCondition(str, Enum):
    """Boundary handling for the PDE solvers.

    ``dirichlet_zero``
        Absorbing: the solution is pinned to zero at both edge nodes.
    ``neumann_zero``
        Reflecting: zero derivative (backward equation) respectively zero
        probability flux (Fokker-Planck), which conserves mass exactly.
    ``natural``
        Copy-out extrapolation; mass may leave through the edges, and a
        warning is emitted when more than 1e-4 of it sits within five grid
        spacings of an edge.
    """

    DIRICHLET_ZERO = "dirichlet_zero"
    NEUMANN_ZERO = "neumann_zero"
    NATURAL = "natural"


@dataclass(frozen=True)
class Grid1D:
    """Uniform spatial grid on ``[x_min, x_max]`` with ``n_cells`` cells."""

    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self) -> None:
        if not self.x_max > self.x_min:
            raise ValueError(f"need x_max > x_min, got [{self.x_min}, {self.x_max}]")
        if self.n_cells < 2:
            raise ValueError(f"need at least two cells, got {self.n_cells}")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def n_nodes(self) -> int:
        return self.n_cells + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_nodes)


@dataclass
class DensityField:
    """Non-negative density values on a spatial grid at a given time."""

    grid: Grid1D
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"values must have shape ({self.grid.n_nodes},), got {self.values.shape}"
            )
        if np.any(self.values < 0):
            raise ValueError("densities must be non-negative")

    def mass(self) -> float:
        """Trapezoidal integral of the density over the grid."""
        return float(np.trapezoid(self.values, self.grid.nodes))

    def normalized(self) -> "DensityField":
        return DensityField(self.grid, self.values / self.mass(), self.time)

    def l1_distance(self, other: "DensityField") -> float:
        if self.grid != other.grid:
            raise ValueError("densities live on different grids")
        return float(np.trapezoid(np.abs(self.values - other.values), self.grid.nodes))

    def save(self, path) -> None:
        """Write the field as a two-column CSV ``x,value`` with header."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "value"])
            for x, v in zip(self.grid.nodes, self.values):
                writer.writerow([repr(float(x)), repr(float(v))])

    @classmethod
    def load(cls, path, time: float = 0.0) -> "DensityField":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header[:2] != ["x", "value"]:
                raise ValueError(f"expected header ['x', 'value'], got {header!r}")
            rows = [(float(x), float(v)) for x, v in reader]
        xs = np.array([r[0] for r in rows])
        grid = Grid1D(xs[0], xs[-1], len(xs) - 1)
        return cls(grid, np.array([r[1] for r in rows]), time)


# ---------------------------------------------------------------------------
# Generator and adjoint on a grid
# ---------------------------------------------------------------------------

def _scalar_coefficients(model: SdeModel, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if model.dim_state != 1 or model.dim_noise != 1:
        raise ValueError("the PDE routines handle scalar models only")
    x = nodes[:, np.newaxis]
    f = np.asarray(model.drift(x), dtype=float).reshape(-1)
    d = np.asarray(model.diffusion_matrix(x), dtype=float).reshape(-1)
    return f, d


def apply_generator(model: SdeModel, values, grid: Grid1D) -> np.ndarray:
    """``L u = f u' + D u''/2`` by central differences on interior nodes.

    Returns an array of length ``grid.n_nodes - 2``; the one-sided
    information needed at the two edge nodes is deliberately not invented.
    """
    u = np.asarray(values, dtype=float)
    if u.shape != (grid.n_nodes,):
        raise ValueError(f"values must be sampled on all {grid.n_nodes} grid nodes")
    f, d = _scalar_coefficients(model, grid.nodes)
    dx = grid.dx
    du = (u[2:] - u[:-2]) / (2.0 * dx)
    d2u = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / dx**2
    return f[1:-1] * du + 0.5 * d[1:-1] * d2u


def apply_adjoint_generator(model: SdeModel, values, grid: Grid1D) -> np.ndarray:
    """``L* rho = (D rho)''/2 - (f rho)'`` on interior nodes."""
    rho = np.asarray(values, dtype=float)
    if rho.shape != (grid.n_nodes,):
        raise ValueError(f"values must be sampled on all {grid.n_nodes} grid nodes")
    f, d = _scalar_coefficients(model, grid.nodes)
    dx = grid.dx
    drho = d * rho
    frho = f * rho
    diff2 = (drho[2:] - 2.0 * drho[1:-1] + drho[:-2]) / dx**2
    diff1 = (frho[2:] - frho[:-2]) / (2.0 * dx)
    return 0.5 * diff2 - diff1


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------

def _backward_operator(model: SdeModel, grid: Grid1D,
                       bc: BoundaryCondition) -> np.ndarray:
    """Tridiagonal matrix of ``L`` in banded storage ``(3, n_nodes)``."""
    f, d = _scalar_coefficients(model, grid.nodes)
    dx = grid.dx
    n = grid.n_nodes
    lower = np.zeros(n)
    diag = np.zeros(n)
    upper = np.zeros(n)
    # interior: f * central first difference + d/2 * central second difference
    lower[:-1] = -f[1:] / (2 * dx) + d[1:] / (2 * dx**2)   # coefficient of u[i-1]
    diag[1:-1] = -d[1:-1] / dx**2
    upper[1:] = f[:-1] / (2 * dx) + d[:-1] / (2 * dx**2)   # coefficient of u[i+1]

    if bc is BoundaryCondition.DIRICHLET_ZERO:
        diag[0] = diag[-1] = 0.0
        upper[1] = 0.0   # row 0 entry
        lower[-2] = 0.0  # row n-1 entry
    elif bc is BoundaryCondition.NEUMANN_ZERO:
        # ghost reflection u[-1] = u[1]: u' = 0, u'' = 2(u1 - u0)/dx^2
        diag[0] = -d[0] / dx**2
        upper[1] = d[0] / dx**2
        diag[-1] = -d[-1] / dx**2
        lower[-2] = d[-1] / dx**2
    else:  # natural: copy-out ghost u[-1] = u[0]
        diag[0] = -f[0] / (2 * dx) - d[0] / (2 * dx**2)
        upper[1] = f[0] / (2 * dx) + d[0] / (2 * dx**2)
        diag[-1] = f[-1] / (2 * dx) - d[-1] / (2 * dx**2)
        lower[-2] = -f[-1] / (2 * dx) + d[-1] / (2 * dx**2)
    return np.vstack([upper, diag, lower])


def _adjoint_operator(model: SdeModel, grid: Grid1D,
                      bc: BoundaryCondition) -> np.ndarray:
    """Tridiagonal matrix of ``L*`` in flux (divergence) form, banded storage.

    The discrete update is ``drho_i/dt = -(J_{i+1/2} - J_{i-1/2})/dx``
    with face current ``J = (f rho)_avg - ((D rho)_right - (D rho)_left)/(2 dx)``,
    which conserves ``sum rho dx`` exactly when the edge currents vanish.
    """
    f, d = _scalar_coefficients(model, grid.nodes)
    dx = grid.dx
    n = grid.n_nodes
    # contribution of node j to face current J_{i+1/2} for j = i, i+1
    # J_{i+1/2} = (f_i rho_i + f_{i+1} rho_{i+1})/2 - (d_{i+1} rho_{i+1} - d_i rho_i)/(2 dx)
    lower = np.zeros(n)
    diag = np.zeros(n)
    upper = np.zeros(n)
    # interior node i: drho_i = -(J_{i+1/2} - J_{i-1/2})/dx
    diag[1:-1] = (-(f[1:-1] / 2 + d[1:-1] / (2 * dx)) + (f[1:-1] / 2 - d[1:-1] / (2 * dx))) / dx
    upper[2:] = -(f[2:] / 2 - d[2:] / (2 * dx)) / dx        # rho[i+1] in J_{i+1/2}
    lower[:-2] = (f[:-2] / 2 + d[:-2] / (2 * dx)) / dx      # rho[i-1] in J_{i-1/2}

    if bc is BoundaryCondition.DIRICHLET_ZERO:
        diag[0] = diag[-1] = 0.0
        upper[1] = lower[-2] = 0.0
    elif bc is BoundaryCondition.NEUMANN_ZERO:
        # no flux through the outer faces
        diag[0] = -(f[0] / 2 + d[0] / (2 * dx)) / dx
        upper[1] = -(f[1] / 2 - d[1] / (2 * dx)) / dx
        diag[-1] = (f[-1] / 2 - d[-1] / (2 * dx)) / dx
        lower[-2] = (f[-2] / 2 + d[-2] / (2 * dx)) / dx
    else:  # natural: drift-driven outflow through the edge faces
        diag[0] = -(f[0] / 2 + d[0] / (2 * dx)) / dx - max(-f[0], 0.0) / dx
        upper[1] = -(f[1] / 2 - d[1] / (2 * dx)) / dx
        diag[-1] = (f[-1] / 2 - d[-1] / (2 * dx)) / dx - max(f[-1], 0.0) / dx
        lower[-2] = (f[-2] / 2 + d[-2] / (2 * dx)) / dx
    return np.vstack([upper, diag, lower])


def _theta_step_matrices(banded_a: np.ndarray, dt: float,
                         theta: float) -> tuple[np.ndarray, np.ndarray]:
    """Banded ``I - theta dt A`` and dense-diagonal helper for the rhs."""
    n = banded_a.shape[1]
    identity = np.zeros_like(banded_a)
    identity[1] = 1.0
    lhs = identity - theta * dt * banded_a
    rhs = identity + (1.0 - theta) * dt * banded_a
    return lhs, rhs


def _banded_matvec(banded: np.ndarray, x: np.ndarray) -> np.ndarray:
    upper, diag, lower = banded
    out = diag[:, np.newaxis] * x if x.ndim == 2 else diag * x
    if x.ndim == 2:
        out[:-1] += upper[1:, np.newaxis] * x[1:]
        out[1:] += lower[:-1, np.newaxis] * x[:-1]
    else:
        out[:-1] += upper[1:] * x[1:]
        out[1:] += lower[:-1] * x[:-1]
    return out


def _check_cfl(model: SdeModel, grid: Grid1D, dt: float) -> None:
    _, d = _scalar_coefficients(model, grid.nodes)
    dt_max = grid.dx**2 / float(np.max(d))
    if dt > dt_max:
        raise CflError(dt, dt_max)


def _evolve(banded_a: np.ndarray, state: np.ndarray, n_steps: int, dt: float,
            method: str) -> np.ndarray:
    if method == "explicit":
        lhs = None
        _, rhs = _theta_step_matrices(banded_a, dt, 0.0)
    elif method == "implicit":
        lhs, rhs = _theta_step_matrices(banded_a, dt, 1.0)
    else:
        raise ValueError(f"method must be 'implicit' or 'explicit', got {method!r}")
    for _ in range(n_steps):
        state = _banded_matvec(rhs, state)
        if lhs is not None:
            state = solve_banded((1, 1), lhs, state)
    return state


def _resolve_bc(bc) -> BoundaryCondition:
    return BoundaryCondition(bc)


def solve_backward_kolmogorov(model: SdeModel, phi, grid: Grid1D, t_end: float,
                              dt: float, bc="neumann_zero",
                              method: str = "implicit") -> np.ndarray:
    """Evolve ``du/dt = L u`` from ``u(0) = phi`` to time ``t_end``.

    ``phi`` may be a callable evaluated on the nodes, an array of node
    values, or a matrix whose columns are evolved simultaneously (this is
    how transition kernels are assembled).  Non-negative data stays
    non-negative with the default implicit scheme, which is asserted on
    every run.  The explicit scheme checks the CFL bound before stepping.
    """
    bc = _resolve_bc(bc)
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    u0 = np.asarray(phi(grid.nodes) if callable(phi) else phi, dtype=float)
    if u0.shape[0] != grid.n_nodes:
        raise ValueError(f"phi must be sampled on all {grid.n_nodes} nodes")
    n_steps = max(1, round(t_end / dt))
    dt_eff = t_end / n_steps
    if method == "explicit":
        _check_cfl(model, grid, dt_eff)
    banded_a = _backward_operator(model, grid, bc)
    if bc is BoundaryCondition.DIRICHLET_ZERO:
        u0 = u0.copy()
        u0[0] = u0[-1] = 0.0
    u = _evolve(banded_a, u0, n_steps, dt_eff, method)
    if bc is BoundaryCondition.DIRICHLET_ZERO:
        u[0] = u[-1] = 0.0
    if method == "implicit" and np.all(u0 >= 0.0):
        floor = 1e-9 * (1.0 + float(np.max(np.abs(u0))))
        assert float(np.min(u)) >= -floor, "implicit backward step lost positivity"
        u = np.clip(u, 0.0, None)
    return u


def solve_fokker_planck(model: SdeModel, rho0: DensityField, t_end: float,
                        dt: float, bc="neumann_zero",
                        method: str = "implicit") -> DensityField:
    """Evolve the Fokker-Planck equation ``drho/dt = L* rho`` to ``t_end``.

    Uses the conservative flux discretisation, so with reflecting
    (``neumann_zero``) boundaries ``sum rho dx`` is conserved to rounding.
    With ``natural`` boundaries a warning reports when more than ``1e-4``
    of the mass sits within five spacings of an edge.
    """
    bc = _resolve_bc(bc)
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    grid = rho0.grid
    rho = rho0.values.copy()
    if bc is BoundaryCondition.DIRICHLET_ZERO:
        rho[0] = rho[-1] = 0.0
    n_steps = max(1, round(t_end / dt))
    dt_eff = t_end / n_steps
    if method == "explicit":
        _check_cfl(model, grid, dt_eff)
    banded_a = _adjoint_operator(model, grid, bc)
    rho = _evolve(banded_a, rho, n_steps, dt_eff, method)
    if bc is BoundaryCondition.DIRICHLET_ZERO:
        rho[0] = rho[-1] = 0.0
    rho = np.clip(rho, 0.0, None)
    out = DensityField(grid, rho, rho0.time + t_end)
    if bc is BoundaryCondition.NATURAL:
        _warn_on_boundary_mass(out)
    return out


def _warn_on_boundary_mass(field: DensityField, band: int = 5,
                           threshold: float = 1e-4) -> None:
    dx = field.grid.dx
    edge = float(np.sum(field.values[:band + 1]) + np.sum(field.values[-band - 1:])) * dx
    if edge > threshold:
        warnings.warn(
            f"{edge:.2e} of the probability mass lies within {band} grid spacings "
            "of the domain edge; natural boundaries are leaking",
            stacklevel=3,
        )


def delta_field(grid: Grid1D, center: float, width: float | None = None) -> DensityField:
    """Normalised Gaussian bump approximating a point mass at ``center``.

    The default width is two grid spacings, narrow enough to act as a
    delta initial condition while remaining resolvable on the grid.
    """
    if not grid.x_min <= center <= grid.x_max:
        raise ValueError(f"center {center} lies outside the grid")
    sd = 2.0 * grid.dx if width is None else width
    vals = np.exp(-0.5 * ((grid.nodes - center) / sd) ** 2)
    field = DensityField(grid, vals)
    return field.normalized()


# ---------------------------------------------------------------------------
# Closed-form densities and stationary states
# ---------------------------------------------------------------------------

def stationary_density_gradient(potential: Callable[[np.ndarray], np.ndarray],
                                grid: Grid1D) -> DensityField:
    """Stationary density ``exp(-U)/Z`` of ``dX = -U'(X) dt + sqrt(2) dW``.

    ``Z`` is the trapezoidal integral over the grid.  If ``exp(-U)`` has
    not decayed at the domain edges (edge value above 1e-3 of the peak)
    the potential is treated as non-confining and an error is raised,
    since the normalisation would be a truncation artifact.
    """
    u = np.asarray(potential(grid.nodes), dtype=float)
    w = np.exp(-(u - u.min()))  # shift for overflow safety; Z absorbs it
    if max(w[0], w[-1]) > 1e-3 * w.max():
        raise ValueError(
            "exp(-U) has not decayed at the domain edges; the potential does not "
            "confine on this grid and exp(-U) is not normalisable here"
        )
    z = float(np.trapezoid(w, grid.nodes))
    return DensityField(grid, w / z)


def free_bm_density(x, t: float) -> np.ndarray:
    """Heat kernel ``exp(-x^2/2t) / sqrt(2 pi t)`` of Brownian motion."""
    if t <= 0:
        raise ValueError("time must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(-(x**2) / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def reflected_bm_density(x, t: float, barrier: float) -> np.ndarray:
    """Transition density of Brownian motion reflected at ``barrier``.

    For a path started at the origin with ``x <= barrier``, the method of
    images adds the mirror source: ``p(t,x) + p(t, 2*barrier - x)``, whose
    derivative vanishes at the barrier (no flux).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x > barrier):
        raise ValueError("the reflected density is defined on x <= barrier")
    return free_bm_density(x, t) + free_bm_density(2.0 * barrier - x, t)


def killed_bm_density(x, t: float, barrier: float) -> np.ndarray:
    """Sub-probability density of Brownian motion killed at ``barrier``.

    The image charge is subtracted: ``p(t,x) - p(t, 2*barrier - x)``; the
    result vanishes at the barrier and its total mass decays in time.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x > barrier):
        raise ValueError("the killed density is defined on x <= barrier")
    return free_bm_density(x, t) - free_bm_density(2.0 * barrier - x, t)


# ---------------------------------------------------------------------------
# Monte Carlo cross-checks
# ---------------------------------------------------------------------------

def mc_semigroup(model: SdeModel, x0, t: float, phi, n_paths: int, dt: float,
                 stream: GaussianStream) -> tuple[float, float]:
    """Estimate ``(P_t phi)(x0) = E[phi(X_t) | X_0 = x0]`` by Euler-Maruyama.

    Returns ``(estimate, standard_error)``.
    """
    grid = TimeGrid(0.0, t, max(1, round(t / dt)))
    paths = euler_maruyama_ensemble(model, x0, grid, n_paths, stream)
    terminal = paths[:, -1, :]
    vals = np.asarray(phi(terminal[:, 0] if model.dim_state == 1 else terminal),
                      dtype=float)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_paths))


def mc_feynman_kac(model: SdeModel, x0, t: float, phi, potential_q, n_paths: int,
                   dt: float, stream: GaussianStream) -> tuple[float, float]:
    """Estimate ``E[exp(-int_0^t q(X_s) ds) phi(X_t)]`` by Euler-Maruyama.

    The killing integral uses left-endpoint quadrature on the simulation
    grid.  Returns ``(estimate, standard_error)``.
    """
    grid = TimeGrid(0.0, t, max(1, round(t / dt)))
    paths = euler_maruyama_ensemble(model, x0, grid, n_paths, stream)
    states = paths[:, :, 0] if model.dim_state == 1 else paths
    q_vals = np.asarray(potential_q(states[:, :-1]), dtype=float)
    weights = np.exp(-q_vals.sum(axis=1) * grid.dt)
    vals = weights * np.asarray(phi(states[:, -1]), dtype=float)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_paths))

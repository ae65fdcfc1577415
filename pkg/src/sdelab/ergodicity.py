"""Ergodicity toolbox: discrete kernels, drift/minorisation certificates,
weighted-total-variation contraction, and Hilbert-metric spectral bounds.

A continuous-time model is reduced to a row-(sub)stochastic matrix on a
spatial grid by :func:`discretize_kernel`.  On such kernels the module

* fits and *verifies* geometric-drift and minorisation certificates, the
  two inequalities behind coupling proofs of geometric ergodicity,
* evaluates the explicit contraction constants ``(beta, alpha_bar)`` of
  the weighted-total-variation metric ``rho_beta`` and measures the
  contraction empirically on random pairs of probability vectors,
* fits uniform-positivity cone bounds ``s(x)m(y) <= p(x,y) <= L s(x)m(y)``,
  computes the Hilbert projective metric and projective diameter, and runs
  power iteration with the resulting ``tanh``/spectral-gap rate guarantees
  (including the substochastic branch, whose left Perron vector is the
  quasistationary distribution),
* produces a Lyapunov-condition report for a model generator, fitting the
  best constants for the standard criteria from stability theory.

Every certificate returned by this module is rechecked entrywise, with
conservative rounding nudges so the inequalities hold exactly in floating
point, not just in exact arithmetic.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .kolmogorov import Grid1D, apply_generator, solve_backward_kolmogorov
from .sde import GaussianStream, SdeModel, TimeGrid, euler_maruyama_ensemble

__all__ = [
    "DiscreteKernel",
    "DriftCertificate",
    "MinorisationCert",
    "ConeBounds",
    "HmContractionReport",
    "JentzschResult",
    "LyapunovReport",
    "discretize_kernel",
    "verify_geometric_drift",
    "drift_violations",
    "verify_minorisation",
    "hm_constants",
    "rho_beta_distance",
    "verify_hm_contraction",
    "fit_cone_bounds",
    "hilbert_metric",
    "projective_diameter",
    "power_iteration_jentzsch",
    "mt_lyapunov_report",
]

_GUARD = 1e-12  # multiplicative nudge making certificate inequalities exact in fp


@dataclass
class DiscreteKernel:
    """Row-indexed transition matrix on a grid (or abstract index set).

    Rows hold the transition weights out of each node; row sums may fall
    below one only when ``substochastic`` is set (absorption).  ``grid``
    is optional so small hand-written matrices can be wrapped directly.
    """

    matrix: np.ndarray
    grid: Grid1D | None = None
    substochastic: bool = False
    t_step: float | None = None
    row_leakage: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValueError(f"kernel matrix must be square, got {self.matrix.shape}")
        if self.grid is not None and self.matrix.shape[0] != self.grid.n_nodes:
            raise ValueError("matrix size does not match the grid")
        if np.any(self.matrix < 0):
            raise ValueError("kernel entries must be non-negative")
        sums = self.matrix.sum(axis=1)
        if np.any(sums > 1.0 + 1e-12):
            raise ValueError(f"row sums exceed one (max {sums.max()!r})")
        if not self.substochastic and np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("rows of a stochastic kernel must sum to one")

    @property
    def n_states(self) -> int:
        return self.matrix.shape[0]

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Right action on functions: ``(P f)(x) = sum_y p(x, y) f(y)``."""
        return self.matrix @ np.asarray(f, dtype=float)

    def apply_adjoint(self, mu: np.ndarray) -> np.ndarray:
        """Left action on measures: ``(mu P)(y) = sum_x mu(x) p(x, y)``."""
        return np.asarray(mu, dtype=float) @ self.matrix

    def save(self, path) -> None:
        """Matrix as CSV plus a JSON sidecar with grid and flags."""
        path = Path(path)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            for row in self.matrix:
                writer.writerow([repr(float(v)) for v in row])
        sidecar = {
            "grid": None if self.grid is None else {
                "x_min": self.grid.x_min, "x_max": self.grid.x_max,
                "n_cells": self.grid.n_cells,
            },
            "t_step": self.t_step,
            "substochastic": self.substochastic,
        }
        with open(path.with_suffix(path.suffix + ".json"), "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DiscreteKernel":
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            matrix = np.array([[float(v) for v in row] for row in csv.reader(fh)])
        with open(path.with_suffix(path.suffix + ".json"), encoding="utf-8") as fh:
            sidecar = json.load(fh)
        grid = None
        if sidecar["grid"] is not None:
            g = sidecar["grid"]
            grid = Grid1D(g["x_min"], g["x_max"], g["n_cells"])
        return cls(matrix, grid, sidecar["substochastic"], sidecar["t_step"])


def _kernel_matrix(kernel) -> np.ndarray:
    """Accept a DiscreteKernel or a bare non-negative square matrix."""
    if isinstance(kernel, DiscreteKernel):
        return kernel.matrix
    m = np.asarray(kernel, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"kernel must be a square matrix, got shape {m.shape}")
    if np.any(m < 0):
        raise ValueError("kernel entries must be non-negative")
    return m


# ---------------------------------------------------------------------------
# Kernel construction
# ---------------------------------------------------------------------------

def discretize_kernel(model: SdeModel, grid: Grid1D, t_step: float,
                      method: str = "pde", *, bc: str = "neumann_zero",
                      dt: float | None = None, n_paths: int = 2000,
                      h: float | None = None,
                      stream: GaussianStream | None = None) -> DiscreteKernel:
    """Transition matrix of ``model`` over one time step on ``grid``.

    The ``pde`` route pushes the identity matrix through the backward
    solver (every column is an indicator function), so one banded
    factorisation per time step serves all rows at once.  With reflecting
    boundaries the rows are renormalized to probability vectors and the
    leaked mass recorded; with absorbing (``dirichlet_zero``) boundaries
    the rows are left substochastic, which is the quasistationary setting.

    The ``mc`` route runs an Euler-Maruyama ensemble from every node and
    histograms the endpoints into the grid cells (endpoints beyond the
    grid are clipped into the edge cells).
    """
    if t_step <= 0:
        raise ValueError("t_step must be positive")
    if method == "pde":
        dt = t_step / 500 if dt is None else dt
        k = solve_backward_kolmogorov(model, np.eye(grid.n_nodes), grid,
                                      t_end=t_step, dt=dt, bc=bc)
        if bc == "dirichlet_zero":
            # Absorbed mass never returns, so the boundary columns are
            # identically zero; the kernel lives on the interior nodes.
            if grid.n_cells < 4:
                raise ValueError("need at least 4 cells for an absorbing kernel")
            inner = Grid1D(grid.x_min + grid.dx, grid.x_max - grid.dx,
                           grid.n_cells - 2)
            k = np.clip(k[1:-1, 1:-1], 0.0, None)
            sums = k.sum(axis=1)
            if np.any(sums <= 0):
                raise ValueError("a kernel row received no mass; refine the discretization")
            k = np.where(sums[:, None] > 1.0, k / sums[:, None], k)
            return DiscreteKernel(k, inner, substochastic=True, t_step=t_step,
                                  row_leakage=1.0 - k.sum(axis=1))
    elif method == "mc":
        if stream is None:
            raise ValueError("the mc route needs a stream")
        if n_paths < 1:
            raise ValueError("need at least one path per row")
        h = t_step / 200 if h is None else h
        tgrid = TimeGrid(0.0, t_step, max(1, round(t_step / h)))
        edges = np.concatenate((
            [grid.x_min - 0.5 * grid.dx],
            grid.nodes[:-1] + 0.5 * grid.dx,
            [grid.x_max + 0.5 * grid.dx],
        ))
        k = np.empty((grid.n_nodes, grid.n_nodes))
        for i, x0 in enumerate(grid.nodes):
            paths = euler_maruyama_ensemble(model, x0, tgrid, n_paths,
                                            stream.child(i))
            endpoints = np.clip(paths[:, -1, 0], grid.x_min, grid.x_max)
            counts, _ = np.histogram(endpoints, bins=edges)
            k[i] = counts / n_paths
    else:
        raise ValueError(f"method must be 'pde' or 'mc', got {method!r}")

    k = np.clip(k, 0.0, None)
    sums = k.sum(axis=1)
    if np.any(sums <= 0):
        raise ValueError("a kernel row received no mass; refine the discretization")
    leakage = 1.0 - sums
    k = k / sums[:, None]
    return DiscreteKernel(k, grid, substochastic=False, t_step=t_step,
                          row_leakage=leakage)


# ---------------------------------------------------------------------------
# Drift and minorisation certificates
# ---------------------------------------------------------------------------

class DriftCertificate(NamedTuple):
    gamma: float
    d: float
    feasible: bool


def verify_geometric_drift(kernel, V) -> DriftCertificate:
    """Fit ``(P V)(x) <= gamma V(x) + d`` with the tightest useful constants.

    For each gamma on a grid in (0, 1) the smallest admissible offset is
    ``d(gamma) = max(P V - gamma V, 0)``.  The fit takes the smallest
    ``gamma`` whose offset is (up to rounding slack) as small as the best
    one found — past the true contraction factor the offset curve goes
    flat, so this locates the elbow.  The returned pair satisfies the
    inequality at every node by construction.
    """
    m = _kernel_matrix(kernel)
    v = np.asarray(V, dtype=float)
    if v.shape != (m.shape[0],):
        raise ValueError("V must be a grid function matching the kernel")
    if np.any(v < 0):
        raise ValueError("V must be non-negative")
    pv = m @ v
    gammas = np.linspace(1e-3, 1.0 - 1e-3, 999)
    offsets = np.maximum(pv[None, :] - gammas[:, None] * v[None, :], 0.0).max(axis=1)
    best = float(offsets.min())
    slack = 1e-9 * max(best, 1.0) + 1e-12
    pick = int(np.argmax(offsets <= best + slack))
    gamma = float(gammas[pick])
    d = float(np.max(np.maximum(pv - gamma * v, 0.0)))
    return DriftCertificate(gamma, d, drift_violations(m, v, gamma, d) == 0)


def drift_violations(kernel, V, gamma: float, d: float) -> int:
    """Number of nodes where ``(P V)(x) <= gamma V(x) + d`` fails.

    The inequality is evaluated as ``P V - gamma V <= d``, the same
    expression the fit maximises, so a fitted certificate passes exactly.
    """
    m = _kernel_matrix(kernel)
    v = np.asarray(V, dtype=float)
    return int(np.sum(m @ v - gamma * v > d))


@dataclass(frozen=True)
class MinorisationCert:
    """Verified minorisation ``p(x, .) >= alpha nu(.)`` for all x in C.

    ``c_nodes`` indexes the small set ``C = {V < R}``; ``nu`` is the
    normalized entrywise row minimum over ``C`` (the largest feasible
    minorising measure) and ``alpha`` its total mass, nudged down so the
    inequality holds exactly in floating point.
    """

    c_nodes: np.ndarray
    alpha: float
    nu: np.ndarray
    level: float

    def violations(self, kernel) -> int:
        m = _kernel_matrix(kernel)
        return int(np.sum(m[self.c_nodes] < self.alpha * self.nu[None, :]))


def verify_minorisation(kernel, level: float, V) -> MinorisationCert:
    """Certify a minorisation condition on the sublevel set ``{V < level}``.

    The minorising measure is the normalized entrywise minimum of the rows
    over the small set; its mass is the certified ``alpha``.  Raises when
    the rows have disjoint support (``alpha = 0``).
    """
    m = _kernel_matrix(kernel)
    v = np.asarray(V, dtype=float)
    if v.shape != (m.shape[0],):
        raise ValueError("V must be a grid function matching the kernel")
    c_nodes = np.flatnonzero(v < level)
    if c_nodes.size == 0:
        raise ValueError(f"the sublevel set {{V < {level}}} is empty")
    row_min = m[c_nodes].min(axis=0)
    alpha_raw = float(row_min.sum())
    if alpha_raw <= 0.0:
        raise ValueError("rows over the small set have disjoint supports (alpha = 0)")
    nu = row_min / alpha_raw
    nu = nu / nu.sum()
    cert = MinorisationCert(c_nodes, alpha_raw * (1.0 - _GUARD), nu, float(level))
    assert cert.violations(m) == 0
    return cert


def hm_constants(gamma: float, d: float, alpha: float, level: float,
                 alpha0: float, gamma0: float) -> tuple[float, float]:
    """Explicit contraction constants ``(beta, alpha_bar)`` for ``rho_beta``.

    Given a geometric drift certificate ``(gamma, d)``, a minorisation
    ``alpha`` on ``{V < level}``, and tuning parameters ``alpha0 in
    (0, alpha)`` and ``gamma0`` in the admissible window
    ``(gamma + 2d/level, 1)``, returns ``beta = alpha0/d`` and

        alpha_bar = max(1 - (alpha - alpha0), (2 + level beta gamma0)/(2 + level beta)),

    which is a bound on the contraction factor of the weighted
    total-variation metric under one kernel step.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    if d <= 0 or level <= 0:
        raise ValueError("d and the small-set level must be positive")
    if not 0.0 < alpha0 < alpha:
        raise ValueError(f"need 0 < alpha0 < alpha, got alpha0={alpha0}, alpha={alpha}")
    low = gamma + 2.0 * d / level
    if low >= 1.0:
        raise ValueError(
            f"no admissible gamma0: gamma + 2d/level = {low:.6g} >= 1; "
            "increase the small-set level"
        )
    if not low < gamma0 < 1.0:
        raise ValueError(f"gamma0 must lie in ({low:.6g}, 1), got {gamma0}")
    beta = alpha0 / d
    alpha_bar = max(1.0 - (alpha - alpha0),
                    (2.0 + level * beta * gamma0) / (2.0 + level * beta))
    assert 0.0 < alpha_bar < 1.0
    return beta, alpha_bar


def rho_beta_distance(mu, nu_meas, V, beta: float) -> float:
    """Weighted total-variation distance ``sum (1 + beta V) |mu - nu|``."""
    mu = np.asarray(mu, dtype=float)
    nu_meas = np.asarray(nu_meas, dtype=float)
    v = np.asarray(V, dtype=float)
    if mu.shape != nu_meas.shape or mu.shape != v.shape:
        raise ValueError("mu, nu and V must share one grid")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return float(np.sum((1.0 + beta * v) * np.abs(mu - nu_meas)))


@dataclass(frozen=True)
class HmContractionReport:
    """Empirical contraction of ``rho_beta`` under one kernel step.

    ``max_ratio`` is the worst contraction factor over random smooth
    pairs; ``max_point_ratio`` the worst over all pairs of point masses,
    where the theoretical bound is attained.
    """

    n_pairs: int
    alpha_bar: float
    max_ratio: float
    mean_ratio: float
    max_point_ratio: float

    @property
    def satisfied(self) -> bool:
        return max(self.max_ratio, self.max_point_ratio) <= self.alpha_bar + 1e-9


def verify_hm_contraction(kernel, V, beta: float, alpha_bar: float,
                          n_pairs: int = 1000,
                          stream: GaussianStream | None = None) -> HmContractionReport:
    """Measure ``rho_beta(mu P, nu P) / rho_beta(mu, nu)`` against ``alpha_bar``.

    Random pairs are independent log-normal-weight probability vectors; on
    top of those, every pair of point masses is checked, since those are
    the extremal measures of the weighted metric.  The certified theory
    promises every ratio is at most ``alpha_bar``.
    """
    m = _kernel_matrix(kernel)
    v = np.asarray(V, dtype=float)
    gen = (stream if stream is not None else GaussianStream(271828)).generator()
    ratios = np.empty(n_pairs)
    for i in range(n_pairs):
        w = np.exp(gen.normal(size=(2, m.shape[0])))
        mu, nu = w / w.sum(axis=1, keepdims=True)
        before = rho_beta_distance(mu, nu, v, beta)
        after = rho_beta_distance(mu @ m, nu @ m, v, beta)
        ratios[i] = 0.0 if before == 0.0 else after / before
    weights = 1.0 + beta * v
    point_ratio = 0.0
    for x in range(m.shape[0]):
        after = np.abs(m[x][None, :] - m) @ weights        # rho_beta of row pairs
        before = 2.0 + beta * (v[x] + v)                   # distance of point masses
        after[x] = 0.0
        point_ratio = max(point_ratio, float(np.max(after / before)))
    return HmContractionReport(n_pairs, alpha_bar, float(ratios.max()),
                               float(ratios.mean()), point_ratio)


# ---------------------------------------------------------------------------
# Cone bounds, Hilbert metric, power iteration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeBounds:
    """Uniform positivity envelope ``s(x)m(y) <= p(x,y) <= L s(x)m(y)``."""

    s: np.ndarray
    m: np.ndarray
    L: float

    def violations(self, kernel) -> int:
        p = _kernel_matrix(kernel)
        outer = np.outer(self.s, self.m)
        return int(np.sum((p < outer) | (p > self.L * outer)))


def fit_cone_bounds(kernel) -> ConeBounds:
    """Fit the tightest uniform-positivity envelope of a positive kernel.

    ``s`` is the row-sum normalization, ``m`` the entrywise minimum of the
    normalized rows, and ``L`` the worst entrywise ratio.  Both ``m`` and
    ``L`` carry a one-part-in-10^12 nudge so the envelope holds exactly in
    floating point; a zero entry means the kernel is not uniformly
    positive and is rejected.
    """
    p = _kernel_matrix(kernel)
    if np.any(p <= 0):
        raise ValueError("kernel has a zero entry; it is not uniformly positive")
    s = p.sum(axis=1)
    normalized = p / s[:, None]
    m = normalized.min(axis=0) * (1.0 - _GUARD)
    ell = float(np.max(p / np.outer(s, m))) * (1.0 + _GUARD)
    bounds = ConeBounds(s, m, ell)
    assert bounds.violations(p) == 0
    return bounds


def hilbert_metric(f, g) -> float:
    """Hilbert projective distance ``|log(min(f/g) min(g/f))|``.

    Scale-invariant in each argument and zero exactly for proportional
    vectors.  Vectors leaving the positive cone are at infinite distance;
    the sentinel ``math.inf`` is returned rather than raising.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError("vectors must have matching shapes")
    if np.any(f <= 0) or np.any(g <= 0):
        return math.inf
    alpha_star = float(np.min(f / g))
    beta_star = float(np.min(g / f))
    return abs(math.log(alpha_star * beta_star))


def projective_diameter(kernel, n_probe: int = 1000,
                        stream: GaussianStream | None = None) -> float:
    """Estimate the projective diameter of the kernel's image cone.

    Takes the maximum Hilbert distance over all pairs of rows and over
    random log-uniform positive vectors pushed through the kernel, and
    asserts the result against the ``2 log L`` bound from the cone fit.
    """
    p = _kernel_matrix(kernel)
    if np.any(p <= 0):
        raise ValueError("projective diameter needs a strictly positive kernel")
    n = p.shape[0]
    delta = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            delta = max(delta, hilbert_metric(p[i], p[j]))
    gen = (stream if stream is not None else GaussianStream(314159)).generator()
    for _ in range(n_probe):
        f, g = np.exp(gen.uniform(-3.0, 3.0, size=(2, n)))
        delta = max(delta, hilbert_metric(p @ f, p @ g))
    bound = 2.0 * math.log(fit_cone_bounds(p).L)
    assert delta <= bound + 1e-9, "diameter exceeded the 2 log L bound"
    return delta


@dataclass(frozen=True)
class JentzschResult:
    """Perron data of a positive kernel from two-sided power iteration.

    ``h0`` is the right eigenvector (sup-norm one), ``pi0`` the left one
    (unit mass; the quasistationary distribution when the kernel is
    substochastic), ``lambda0`` the shared eigenvalue, and
    ``observed_rate`` the fitted geometric decay of successive projective
    distances during the iteration.
    """

    lambda0: float
    h0: np.ndarray
    pi0: np.ndarray
    observed_rate: float
    n_iterations: int
    residual_right: float
    residual_left: float


def power_iteration_jentzsch(kernel, tol: float = 1e-10,
                             max_iter: int = 10_000) -> JentzschResult:
    """Two-sided power iteration with a projective-contraction rate check.

    Iterates ``h -> P h`` and ``pi -> pi P`` until both sup-norm residuals
    against the Rayleigh eigenvalue drop below ``tol``; raises if
    ``max_iter`` is exhausted first.  The observed projective decay rate
    is asserted against the ``1 - 1/L^2`` spectral-gap guarantee.
    """
    p = _kernel_matrix(kernel)
    if np.any(p <= 0):
        raise ValueError("power iteration with guarantees needs a positive kernel")
    n = p.shape[0]
    # generic positive starts (a constant start is already the Perron vector
    # of a stochastic kernel, which would hide the convergence rate)
    h = 1.0 + np.arange(n) / (2.0 * max(n - 1, 1))
    pi = h[::-1] / h.sum()
    thetas = []
    for iteration in range(1, max_iter + 1):
        h_new = p @ h
        h_new /= np.max(np.abs(h_new))
        pi_new = pi @ p
        pi_new /= pi_new.sum()
        thetas.append(hilbert_metric(h_new, h))
        h, pi = h_new, pi_new
        lam = float(pi @ (p @ h)) / float(pi @ h)
        res_right = float(np.max(np.abs(p @ h - lam * h)))
        res_left = float(np.max(np.abs(pi @ p - lam * pi)))
        if res_right <= tol and res_left <= tol:
            break
    else:
        raise RuntimeError(f"power iteration did not converge in {max_iter} steps")

    usable = [(a, b) for a, b in zip(thetas[:-1], thetas[1:]) if a > 1e-10 and b > 0]
    rate = float(np.median([b / a for a, b in usable])) if usable else 0.0
    gap_bound = 1.0 - 1.0 / fit_cone_bounds(p).L ** 2
    assert rate <= gap_bound + max(tol, 1e-9), (
        "observed rate exceeded the spectral-gap bound")
    return JentzschResult(lam, h, pi, rate, iteration, res_right, res_left)


# ---------------------------------------------------------------------------
# Lyapunov criteria report
# ---------------------------------------------------------------------------

@dataclass
class LyapunovReport:
    """Best-constant fits of the standard Lyapunov drift criteria.

    Each entry reports feasibility and the fitted constants for one
    criterion applied to ``L V`` on the interior grid nodes:

    ``bounded_growth``      L V <= c V + d       (global solutions)
    ``non_evanescence``     L V <= d 1_C         (no escape to infinity)
    ``harris_recurrence``   L V <= -c + d 1_C    (positive recurrence)
    ``exponential``         L V <= -c V + d      (geometric ergodicity)

    The topological side conditions (compactness/petiteness of the small
    sets) are not checkable on a grid and are reported as assumed.
    """

    v_values: np.ndarray
    generator_values: np.ndarray
    bounded_growth: dict
    non_evanescence: dict
    harris_recurrence: dict
    exponential: dict
    assumed: tuple[str, ...] = (
        "sublevel sets compact/petite",
        "continuity and irreducibility of the dynamics",
    )

    def to_json(self, path) -> None:
        def clean(d):
            return {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                    for k, v in d.items()}

        payload = {
            "bounded_growth": clean(self.bounded_growth),
            "non_evanescence": clean(self.non_evanescence),
            "harris_recurrence": clean(self.harris_recurrence),
            "exponential": clean(self.exponential),
            "assumed": list(self.assumed),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _affine_elbow(lhs: np.ndarray, weight: np.ndarray, c_grid: np.ndarray,
                  pick_largest: bool) -> tuple[float, float]:
    """Best (c, d) with ``lhs <= c * weight + d`` over a grid of slopes.

    The offset curve ``d(c) = max(lhs - c weight, 0)`` is scanned and the
    fit keeps the smallest slope whose offset is within two percent of
    the best one — or the largest such slope when ``pick_largest`` (used
    for the damping criterion, where stronger damping is the useful
    constant and the offset curve is flat up to the true rate).
    """
    offsets = np.maximum(lhs[None, :] - c_grid[:, None] * weight[None, :], 0.0).max(axis=1)
    best = float(offsets.min())
    ok = offsets <= best * 1.02 + 1e-12
    idx = len(ok) - 1 - int(np.argmax(ok[::-1])) if pick_largest else int(np.argmax(ok))
    c = float(c_grid[idx])
    d = float(np.max(np.maximum(lhs - c * weight, 0.0)))
    return c, d


def mt_lyapunov_report(model: SdeModel, V, grid: Grid1D) -> LyapunovReport:
    """Fit the four Lyapunov drift criteria for ``model`` with candidate ``V``.

    ``L V`` is evaluated by central differences on the interior nodes.
    ``V`` must be non-negative and grow toward both grid ends, since the
    criteria concern behaviour near infinity and a decaying candidate
    would make the truncated fits meaningless.  Binding nodes of the
    damping fit are checked to lie away from the grid edge; a fit that
    only works on the outermost nodes is reported infeasible because it
    reflects truncation rather than actual damping.
    """
    v = np.asarray(V(grid.nodes) if callable(V) else V, dtype=float)
    if v.shape != (grid.n_nodes,):
        raise ValueError(f"V must be sampled on all {grid.n_nodes} nodes")
    if np.any(v < 0):
        raise ValueError("V must be non-negative")
    mid = grid.n_nodes // 2
    if v[0] < np.max(v[:mid]) or v[-1] < np.max(v[mid:]):
        raise ValueError("V must increase toward the grid boundary")

    lv = apply_generator(model, v, grid)
    vi = v[1:-1]
    n = vi.size

    # L V <= c V + d: smallest growth rate c
    c_grid = np.linspace(0.0, 10.0, 2001)
    c0, d0 = _affine_elbow(lv, vi, c_grid, pick_largest=False)
    bounded_growth = {"feasible": bool(np.all(lv - c0 * vi <= d0)),
                      "c": c0, "d": d0}

    # L V <= d 1_C with C the smallest sublevel set hiding all positivity
    levels = np.unique(vi)
    non_evanescence = {"feasible": False, "d": None, "level": None}
    for level in levels:
        outside = vi >= level
        if np.all(lv[outside] <= 0.0):
            inside = ~outside
            d1 = float(np.max(lv[inside], initial=0.0))
            non_evanescence = {"feasible": True, "d": d1, "level": float(level)}
            break

    # L V <= -c + d 1_C with C the median sublevel set
    level2 = float(np.median(vi))
    outside = vi >= level2
    c2 = float(-np.max(lv[outside]))
    if c2 > 0.0:
        d2 = float(np.max(lv[~outside] + c2, initial=0.0))
        harris_recurrence = {"feasible": True, "c": c2, "d": d2, "level": level2}
    else:
        harris_recurrence = {"feasible": False, "c": None, "d": None, "level": level2}

    # L V <= -c V + d: strongest damping rate c, elbow from above.  A fit
    # whose inequality only binds on the outermost nodes reflects grid
    # truncation rather than genuine damping and is rejected.
    c_grid = np.linspace(0.0, 20.0, 4001)
    c3, d3 = _affine_elbow(lv, -vi, c_grid, pick_largest=True)
    binding = np.flatnonzero(lv + c3 * vi >= d3 * (1.0 - 1e-9) - 1e-12)
    edge_only = binding.size > 0 and bool(np.all((binding <= 1) | (binding >= n - 2)))
    exponential = {"feasible": bool(c3 > 0.0 and not edge_only
                                    and np.all(lv - c3 * (-vi) <= d3)),
                   "c": c3, "d": d3}

    return LyapunovReport(v, lv, bounded_growth, non_evanescence,
                          harris_recurrence, exponential)

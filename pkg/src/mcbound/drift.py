"""Drift functions and sub-eigenfunctions of the derivative-weighted operator.

For a random map ``f`` the operator ``L phi(x) = E[phi(f(x)) D_x f]`` governs
Wasserstein contraction: any ``phi >= 1`` with ``L phi <= r phi`` and ``r < 1``
is a drift function.  This module covers the finite-rank dominating
operators ``b(x) sum_i 1_{A_i}(x) ∫ phi dmu_i`` (their Q-matrix and Perron
root), truncation of sub-eigenfunctions that are not bounded below,
switching by a positive weight ``h``, and Monte Carlo checks of the growth
condition.

Suprema over the state space are evaluated on finite grids; these checks
verify analytic constants, they never replace them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .ifs import RandomMapSystem
from .quadrature import DEFAULT, QuadratureError, QuadratureSettings, integrate_1d
from .rng import RngStream


class DriftError(ValueError):
    """A drift construction is invalid (rate >= 1, vanishing weight, ...)."""


class GrowthRateError(ArithmeticError):
    """A Monte Carlo summand was not finite."""


@dataclass(frozen=True)
class DriftFunction:
    phi: Callable[[np.ndarray], np.ndarray]
    rate: float
    description: str = ""

    def __post_init__(self):
        if not 0 < self.rate < 1:
            raise DriftError(f"drift rate must lie in (0, 1), got {self.rate}")

    def __call__(self, x):
        return self.phi(np.asarray(x, dtype=float))

    def check_lower_bound(self, grid) -> float:
        """Smallest value of phi on ``grid``; raises if it drops below 1."""
        v = np.asarray(self(grid), dtype=float)
        m = float(v.min())
        if m < 1 - 1e-12:
            raise DriftError(f"phi < 1 at x={float(np.asarray(grid)[v.argmin()])} (value {m})")
        return m


# ---------------------------------------------------------------------------
# Finite-rank operators


@dataclass(frozen=True)
class DensityMeasure:
    """``mu(dx) = density(x) dx`` on ``(lo, hi)``."""

    density: Callable[[float], float]
    lo: float
    hi: float
    breakpoints: tuple = ()

    def integrate(self, g, a=-math.inf, b=math.inf, settings: QuadratureSettings = DEFAULT):
        lo, hi = max(a, self.lo), min(b, self.hi)
        if hi <= lo:
            return 0.0, 0.0
        return integrate_1d(lambda x: g(x) * self.density(x), lo, hi, self.breakpoints, settings)


@dataclass(frozen=True)
class AtomMeasure:
    """``mu = sum_k w_k delta_{x_k}`` with positive weights."""

    points: tuple
    weights: tuple

    def __post_init__(self):
        if len(self.points) != len(self.weights) or not self.points:
            raise ValueError("atom measure needs matching, non-empty points and weights")
        if any(w <= 0 for w in self.weights):
            raise ValueError("atom weights must be positive")

    def integrate(self, g, a=-math.inf, b=math.inf, settings=None):
        tot = sum(w * g(x) for x, w in zip(self.points, self.weights) if a <= x < b)
        return float(tot), 0.0


Measure = Union[DensityMeasure, AtomMeasure]


@dataclass(frozen=True)
class PartitionOperator:
    """``L phi(x) = b(x) * ∫ phi dmu_i`` for ``x`` in cell ``A_i``.

    Cells are half-open ``[lo, hi)`` intervals listed left to right; they
    must tile ``(cells[0][0], cells[-1][1])`` without gaps.
    """

    b: Callable[[float], float]
    cells: tuple
    measures: tuple

    def __post_init__(self):
        cells = tuple((float(a), float(c)) for a, c in self.cells)
        if len(cells) == 0 or len(cells) != len(self.measures):
            raise ValueError("need one measure per cell and at least one cell")
        for (a, c), (a2, _) in zip(cells[:-1], cells[1:]):
            if c != a2:
                raise ValueError(f"cells must be contiguous: {c} != {a2}")
        if any(c <= a for a, c in cells):
            raise ValueError("every cell needs lo < hi")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "measures", tuple(self.measures))

    @property
    def n(self) -> int:
        return len(self.cells)

    @property
    def support(self) -> tuple:
        return self.cells[0][0], self.cells[-1][1]

    def edges(self) -> list:
        return [c[0] for c in self.cells[1:]]

    def cell_index(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.support
        if np.any((x <= lo) | (x >= hi)):
            bad = x[(x <= lo) | (x >= hi)][0]
            raise ValueError(f"x={bad} lies outside every cell")
        return np.searchsorted(np.array(self.edges()), x, side="right")

    def apply(self, phi, x, settings: QuadratureSettings = DEFAULT) -> np.ndarray:
        """``L phi`` at the points ``x`` (integrals by quadrature)."""
        idx = self.cell_index(x)
        lo, hi = self.support
        integrals = []
        for m in self.measures:
            if isinstance(m, DensityMeasure):
                pts = tuple(sorted(set(m.breakpoints) | set(self.edges())))
                m = DensityMeasure(m.density, m.lo, m.hi, pts)
            integrals.append(m.integrate(phi, lo, hi, settings)[0])
        bx = np.array([self.b(v) for v in np.atleast_1d(x)])
        return bx * np.asarray(integrals)[idx]


def build_q_matrix(op: PartitionOperator, settings: QuadratureSettings = DEFAULT) -> np.ndarray:
    """``Q[i, j] = ∫_{A_j} b dmu_i``."""
    q = np.empty((op.n, op.n))
    for i, m in enumerate(op.measures):
        for j, (a, c) in enumerate(op.cells):
            try:
                q[i, j] = m.integrate(op.b, a, c, settings)[0]
            except QuadratureError as exc:
                raise QuadratureError(f"Q[{i},{j}] diverged: {exc}") from exc
    if not np.all(np.isfinite(q)) or np.any(q < 0):
        raise QuadratureError("Q-matrix has negative or non-finite entries")
    return q


@dataclass(frozen=True)
class SubEigenCertificate:
    p: np.ndarray
    r: float
    residual: float
    perron_root: float


@dataclass(frozen=True)
class Infeasible:
    """No positive ``p`` with ``Qp <= r p``; ``perron_root`` is the witness."""

    perron_root: float
    target: float
    p: np.ndarray = field(repr=False, default=None)

    def __bool__(self):
        return False


def perron_root(q, tol: float = 1e-12, max_iter: int = 100_000) -> tuple[float, np.ndarray]:
    """Perron root and a non-negative eigenvector of ``q >= 0``.

    Power iteration runs on ``q + I``, which is aperiodic and has the same
    eigenvectors; if it stalls, the root falls back to the largest real
    part among the dense eigenvalues.
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if q.shape != (n, n) or np.any(q < 0):
        raise ValueError("Q must be a square non-negative matrix")
    m = q + np.eye(n)
    v = np.full(n, 1.0 / n)
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        new = float(w.sum())
        w /= new
        if abs(new - lam) <= tol * new and np.max(np.abs(w - v)) <= tol:
            return new - 1.0, w
        v, lam = w, new
    ev, vec = np.linalg.eig(q)
    k = int(np.argmax(ev.real))
    vec = np.abs(vec[:, k].real)
    return float(ev[k].real), vec / vec.sum()


def find_sub_eigenvector(q, target_r: float) -> Union[SubEigenCertificate, Infeasible]:
    """A positive ``p`` with ``Qp <= target_r * p``, or :class:`Infeasible`.

    Feasible iff the Perron root is strictly below ``target_r``; an exact tie
    is reported as infeasible.  When the Perron vector has zero entries
    (reducible ``Q``) the positive vector ``(rI - Q)^{-1} 1`` is used instead.
    """
    if not target_r > 0:
        raise ValueError("target rate must be positive")
    q = np.atleast_2d(np.asarray(q, dtype=float))
    root, p = perron_root(q)
    if root >= target_r:
        floor = np.maximum(p, 1e-12 * p.max())
        return Infeasible(root, target_r, floor / floor.max())
    if np.all(p > 1e-14 * p.max()):
        res = float(np.max((q @ p) / p))
        if res <= target_r:
            p = p / p.max()
            return SubEigenCertificate(p, target_r, max(res, root), root)
    p = np.linalg.solve(target_r * np.eye(q.shape[0]) - q, np.ones(q.shape[0]))
    p = p / p.max()
    res = float(np.max((q @ p) / p))
    return SubEigenCertificate(p, target_r, res, root)


def subeigenfunction_from_vector(op: PartitionOperator, cert: SubEigenCertificate):
    """``phi(x) = p_{cell(x)} b(x)``."""
    p = np.asarray(cert.p, dtype=float)
    if p.shape != (op.n,) or np.any(p <= 0):
        raise ValueError("certificate vector does not match the operator")

    def phi(x):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = p[op.cell_index(xs)] * np.array([op.b(v) for v in xs])
        return out if np.ndim(x) else float(out[0])

    return phi


@dataclass(frozen=True)
class GridCheck:
    max_ratio: float
    argmax: float
    passed: bool
    grid_size: int

    def as_dict(self) -> dict:
        return {"max_ratio": self.max_ratio, "argmax": self.argmax,
                "passed": self.passed, "grid_size": self.grid_size}


def grid_check(op: PartitionOperator, phi, r: float, grid=None, tol: float = 1e-6,
               settings: QuadratureSettings = DEFAULT) -> GridCheck:
    """Evaluate ``max_x (L phi)(x) / phi(x)`` over a grid and compare with ``r``.

    Cell midpoints are always included so every cell is probed.
    """
    if grid is None:
        grid = default_grid(*op.support)
    mids = [0.5 * (a + c) if math.isfinite(a) and math.isfinite(c) else None for a, c in op.cells]
    grid = np.union1d(np.asarray(grid, float), [m for m in mids if m is not None])
    lo, hi = op.support
    grid = grid[(grid > lo) & (grid < hi)]
    lphi = op.apply(phi, grid, settings)
    ratio = lphi / np.asarray(phi(grid), float)
    k = int(np.argmax(ratio))
    return GridCheck(float(ratio[k]), float(grid[k]), bool(ratio[k] <= r + tol), grid.size)


def default_grid(lo: float, hi: float, n: int = 200) -> np.ndarray:
    """Verification grid: log-spaced on ``(1e-3, 1e3)`` for unbounded spaces."""
    if math.isfinite(lo) and math.isfinite(hi):
        return np.linspace(lo, hi, n + 2)[1:-1]
    a = max(lo, 1e-3) if lo >= 0 else -1e3
    return np.geomspace(a, 1e3, n) if a > 0 else np.linspace(a, 1e3, n)


# ---------------------------------------------------------------------------
# Truncation and switching


def truncated_phi(phi, epsilon: float):
    """``phi_eps(x) = max(phi(x), eps) / eps`` (always >= 1)."""
    return lambda x: np.maximum(phi(x), epsilon) / epsilon


def truncate_drift(phi, r: float, A0: float, epsilon: float, description: str = "") -> DriftFunction:
    """Drift function ``phi_eps`` with rate ``r + epsilon * A0``.

    ``A0 = sup_x E[D_x f] / phi(x)`` is supplied by the caller.
    """
    if not epsilon > 0:
        raise DriftError("epsilon must be positive")
    if A0 < 0 or not math.isfinite(A0):
        raise DriftError("A0 must be finite and non-negative")
    r_eps = r + epsilon * A0
    if r_eps >= 1:
        raise DriftError(f"truncation too coarse: r + eps*A0 = {r_eps} >= 1")
    desc = description or f"max(phi, {epsilon})/{epsilon}"
    return DriftFunction(truncated_phi(phi, epsilon), r_eps, desc)


def threshold_steps(coefficient: float, rate: float, target: float) -> int:
    """Smallest ``n >= 1`` with ``coefficient * rate**n < target``."""
    if coefficient < target:
        return 1
    n = max(1, math.floor(math.log(target / coefficient) / math.log(rate)))
    while coefficient * rate ** n >= target:
        n += 1
    while n > 1 and coefficient * rate ** (n - 1) < target:
        n -= 1
    return n


def epsilon_for_target(r: float, A0: float, coefficient: Callable[[float], float],
                       target: float, n_grid: int = 400) -> tuple[float, int]:
    """The truncation level minimizing the steps needed to reach ``target``.

    ``coefficient(eps)`` is the bound prefactor before division by
    ``1 - r_eps``.  Searches a log grid of ``eps`` in ``(0, (1 - r)/A0)``.
    Returns ``(epsilon, n)``.
    """
    hi = (1 - r) / A0 if A0 > 0 else 1.0
    best = (math.nan, None)
    for eps in np.geomspace(hi * 1e-6, hi * (1 - 1e-6), n_grid):
        rate = r + eps * A0
        n = threshold_steps(coefficient(eps) / (1 - rate), rate, target)
        if best[1] is None or n < best[1]:
            best = (float(eps), n)
    return best


def switch_operator(kernel_density, h, check_grid=None, tol: float = 1e-300):
    """The kernel ``(x, y) -> k(x, y) h(y) / h(x)``.

    ``phi`` is an r-sub-eigenfunction of ``k`` iff ``phi / h`` is one of the
    switched kernel.  ``check_grid`` (optional) is screened for ``h`` values
    at or below ``tol``.
    """
    if check_grid is not None:
        hv = np.asarray(h(np.asarray(check_grid, float)), float)
        if np.any(~(hv > tol)):
            bad = np.asarray(check_grid, float)[~(hv > tol)][0]
            raise DriftError(f"h vanishes at x={bad}")

    def switched(x, y):
        return kernel_density(x, y) * h(y) / h(x)

    return switched


def kernel_ratio(kernel_density, phi, x_grid, y_lo: float, y_hi: float,
                 settings: QuadratureSettings = DEFAULT, points=None) -> np.ndarray:
    """``∫ phi(y) k(x, y) dy / phi(x)`` at each ``x`` in the grid."""
    out = []
    for x in np.asarray(x_grid, float):
        v, _ = integrate_1d(lambda y: phi(y) * kernel_density(x, y), y_lo, y_hi, points, settings)
        out.append(v / phi(x))
    return np.array(out)


# ---------------------------------------------------------------------------
# Monte Carlo growth checks


@dataclass(frozen=True)
class GrowthEstimate:
    grid: np.ndarray
    estimates: np.ndarray
    std_errors: np.ndarray
    replicas: int

    @property
    def max(self) -> float:
        return float(self.estimates.max())

    @property
    def argmax(self) -> float:
        return float(self.grid[int(self.estimates.argmax())])

    def violations(self, rate, k: float = 3.0) -> np.ndarray:
        """Grid points where the estimate exceeds ``rate + k*SE``."""
        return self.grid[self.estimates > np.asarray(rate) + k * self.std_errors]


def _phi_of(phi):
    return phi.phi if isinstance(phi, DriftFunction) else phi


def empirical_growth_rate(system: RandomMapSystem, phi, grid, replicas: int,
                          rng: RngStream) -> GrowthEstimate:
    """Monte Carlo ``E[phi(f(x)) D_x f] / phi(x)`` at each grid point.

    Grid point ``k`` draws from ``rng.child(k)``, so points are independent
    and the result does not depend on evaluation order.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be non-empty")
    if not np.all(system.contains(grid)):
        raise ValueError("grid leaves the state space")
    f = _phi_of(phi)
    est, se = np.empty(grid.size), np.empty(grid.size)
    for k, x in enumerate(grid):
        w = system.sample_noise(rng.child(k), 1, replicas)
        xs = np.full(replicas, x)
        vals = f(system.apply(w, xs)) * system.local_lipschitz(w, xs) / f(np.array([x]))[0]
        bad = ~np.isfinite(vals)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise GrowthRateError(f"non-finite summand at x={x}, noise={w[i].tolist()}")
        est[k] = vals.mean()
        se[k] = vals.std(ddof=1) / math.sqrt(replicas) if replicas > 1 else math.nan
    return GrowthEstimate(grid, est, se, replicas)


def derivative_growth(system: RandomMapSystem, grid, n_max: int, replicas: int,
                      rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """``G_n(x) = E[D_x F_n]`` for ``n = 0..n_max`` at each grid point.

    ``D_x F_n`` is the product of local Lipschitz factors along the forward
    path.  Returns ``(means, std_errors)`` of shape ``(n_max + 1, len(grid))``.
    """
    grid = np.asarray(grid, dtype=float)
    means = np.ones((n_max + 1, grid.size))
    ses = np.zeros((n_max + 1, grid.size))
    for k, x0 in enumerate(grid):
        sub = rng.child(k)
        x = np.full(replicas, x0)
        d = np.ones(replicas)
        for t in range(1, n_max + 1):
            w = system.sample_noise(sub, t, replicas)
            d = d * system.local_lipschitz(w, x)
            x = system.apply(w, x)
            system.check_states(x, t)
            means[t, k] = d.mean()
            ses[t, k] = d.std(ddof=1) / math.sqrt(replicas) if replicas > 1 else math.nan
    return means, ses


@dataclass(frozen=True)
class DriftCertificate:
    phi_description: str
    r: float
    epsilon: Optional[float]
    A0: Optional[float]
    r_epsilon: float
    grid_check: Optional[dict] = None

    def as_dict(self) -> dict:
        return {"phi_description": self.phi_description, "r": self.r, "epsilon": self.epsilon,
                "A0": self.A0, "r_epsilon": self.r_epsilon, "grid_check": self.grid_check}

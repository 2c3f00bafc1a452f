"""Wasserstein-1 and total-variation distances for univariate laws.

Sample-based estimators work on equal-size sample sets; density-based TV
uses adaptive quadrature and cross-checks the two standard integral forms
``½∫|p - q|`` and ``1 - ∫min(p, q)`` against each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, signal, special

from .quadrature import DEFAULT, QuadratureError, QuadratureSettings, integrate_1d
from .rng import RngStream


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    sorted_flag: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("empty sample set")
        if self.sorted_flag and np.any(np.diff(v) < 0):
            raise ValueError("sorted_flag set but values are not non-decreasing")
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, values) -> "SampleSet":
        return values if isinstance(values, SampleSet) else cls(values)

    def sorted(self) -> "SampleSet":
        return self if self.sorted_flag else SampleSet(np.sort(self.values), True)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class EmpiricalDistance:
    """A Monte Carlo distance estimate.

    ``std_error`` is the bootstrap root-mean-square error
    ``sqrt(sd**2 + bias**2)``; ``bootstrap_sd`` and ``bias`` are kept
    separately.  ``nan`` means unavailable (too few samples or no bootstrap).
    """

    value: float
    n_samples: int
    std_error: float
    kind: str
    bootstrap_sd: float = math.nan
    bias: float = math.nan
    diagnostic: bool = False
    bandwidth: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("wasserstein", "tv"):
            raise ValueError(f"unknown distance kind {self.kind!r}")
        if not self.value >= 0:
            raise ValueError("distance must be non-negative")
        if self.kind == "tv" and self.value > 1 + 1e-12:
            raise ValueError("TV distance exceeds 1")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _rmse(reps: np.ndarray, value: float) -> tuple[float, float, float]:
    if reps.size < 2:
        return math.nan, math.nan, math.nan
    sd = float(np.std(reps, ddof=1))
    bias = float(np.mean(reps) - value)
    return math.hypot(sd, bias), sd, bias


def equalize_sizes(a, b, rng: RngStream):
    """Bootstrap-resample the larger sample set down to the smaller size."""
    a, b = SampleSet.of(a), SampleSet.of(b)
    if len(a) == len(b):
        return a, b
    gen = rng.generator()
    if len(a) > len(b):
        return SampleSet(gen.choice(a.values, size=len(b), replace=True)), b
    return a, SampleSet(gen.choice(b.values, size=len(a), replace=True))


def _w1_sorted(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean(np.abs(a - b)))


def wasserstein1_empirical(a, b, n_boot: int = 200, rng: RngStream = None) -> EmpiricalDistance:
    """Exact W1 between two equal-size empirical measures (sorted matching).

    ``n_boot`` bootstrap resamples of both sets give the error estimate.
    """
    a, b = SampleSet.of(a).sorted(), SampleSet.of(b).sorted()
    if len(a) != len(b):
        raise ValueError(f"sample sizes differ ({len(a)} vs {len(b)}); use equalize_sizes first")
    value = _w1_sorted(a.values, b.values)
    n = len(a)
    rmse = sd = bias = math.nan
    if n_boot > 0 and n > 1:
        gen = (rng or RngStream(0)).generator()
        reps = np.empty(n_boot)
        for i in range(n_boot):
            # Resample counts on the sorted data give a sorted resample.
            ra = np.repeat(a.values, np.bincount(gen.integers(0, n, n), minlength=n))
            rb = np.repeat(b.values, np.bincount(gen.integers(0, n, n), minlength=n))
            reps[i] = _w1_sorted(ra, rb)
        rmse, sd, bias = _rmse(reps, value)
    return EmpiricalDistance(value, n, rmse, "wasserstein", sd, bias)


@dataclass
class DensitySpec:
    """A univariate density on ``support`` with optional breakpoints.

    ``pdf`` takes a float and returns a float.  ``center``/``scale`` guide the
    crossing-point probe on infinite supports.
    """

    pdf: Callable[[float], float]
    support: tuple
    normalization_tolerance: float = 1e-6
    breakpoints: Sequence[float] = ()
    center: float = 0.0
    scale: float = 1.0
    mass: Optional[float] = field(default=None, repr=False)

    def normalize_check(self, settings: QuadratureSettings = DEFAULT) -> float:
        lo, hi = self.support
        m, _ = integrate_1d(self.pdf, lo, hi, self._points(), settings)
        if abs(m - 1.0) > self.normalization_tolerance:
            raise ValueError(f"density integrates to {m}, not 1 within {self.normalization_tolerance}")
        self.mass = m
        return m

    def _points(self):
        lo, hi = self.support
        pts = list(self.breakpoints)
        if not math.isfinite(lo) or not math.isfinite(hi):
            pts.append(min(max(self.center, lo), hi))
        return pts

    def probe_grid(self, n: int = 2001) -> np.ndarray:
        lo, hi = self.support
        if math.isfinite(lo) and math.isfinite(hi):
            return np.linspace(lo, hi, n)[1:-1]
        t = np.linspace(-1.0, 1.0, n)[1:-1]
        x = self.center + self.scale * t / (1.0 - t * t)
        return x[(x > lo) & (x < hi)]


def _crossings(f: Callable[[float], float], grid: np.ndarray) -> list:
    vals = np.array([f(x) for x in grid])
    out = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        try:
            out.append(optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-14))
        except ValueError:
            pass
    return out


def tv_from_densities(p: DensitySpec, q: DensitySpec, settings: QuadratureSettings = DEFAULT,
                      agreement: float = 1e-8) -> float:
    """``d_TV = ½∫|p - q|``, cross-checked against ``1 - ∫min(p, q)``.

    Raises :class:`QuadratureError` if either integral fails or the two forms
    disagree by more than ``agreement`` plus the quadrature error estimates.
    """
    p.normalize_check(settings)
    q.normalize_check(settings)
    lo = min(p.support[0], q.support[0])
    hi = max(p.support[1], q.support[1])
    diff = lambda z: p.pdf(z) - q.pdf(z)
    grid = np.union1d(p.probe_grid(), q.probe_grid())
    grid = grid[(grid > lo) & (grid < hi)]
    pts = set(p._points()) | set(q._points()) | set(_crossings(diff, grid))
    for s in (p.support, q.support):
        pts.update(v for v in s if math.isfinite(v))
    pts = sorted(pts)
    half_abs, e1 = integrate_1d(lambda z: abs(diff(z)), lo, hi, pts, settings)
    overlap, e2 = integrate_1d(lambda z: min(p.pdf(z), q.pdf(z)), lo, hi, pts, settings)
    tv1 = 0.5 * half_abs
    # Normalization errors of p and q enter the min-form directly.
    tv2 = 0.5 * (p.mass + q.mass) - overlap
    if abs(tv1 - tv2) > agreement + e1 + e2:
        raise QuadratureError(f"TV forms disagree: {tv1!r} vs {tv2!r}")
    return float(min(max(tv1, 0.0), 1.0))


def normal_density(mean: float = 0.0, sd: float = 1.0) -> DensitySpec:
    c = 1.0 / (sd * math.sqrt(2.0 * math.pi))
    return DensitySpec(lambda z: c * math.exp(-0.5 * ((z - mean) / sd) ** 2),
                       (-math.inf, math.inf), center=mean, scale=sd)


def tv_scale_normal(a: float, b: float) -> float:
    """Exact ``d_TV(Z/√a, Z/√b)`` for ``Z ~ N(0, 1)``.

    The two densities cross at ``±t*`` with ``t*² = log(b/a)/(b - a)``; the
    narrower one dominates inside, so the distance is a difference of
    Normal probabilities of ``[-t*, t*]``.
    """
    if not (a > 0 and b > 0):
        raise ValueError("scale parameters must be positive")
    if a == b:
        return 0.0
    lo, hi = min(a, b), max(a, b)
    t = math.sqrt(math.log(hi / lo) / (hi - lo))
    value = 2.0 * (special.ndtr(math.sqrt(hi) * t) - special.ndtr(math.sqrt(lo) * t))
    assert value <= (hi - lo) / hi + 1e-15
    return float(value)


def tv_normal_shift(t: float) -> float:
    """Exact ``d_TV(Z, Z + t) = 2Φ(|t|/2) - 1``."""
    return float(2.0 * special.ndtr(abs(t) / 2.0) - 1.0)


def silverman_bandwidth(values: np.ndarray) -> float:
    v = np.asarray(values, dtype=float)
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    q75, q25 = np.percentile(v, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if spread <= 0:
        spread = max(abs(float(v.mean())), 1.0) * 1e-3
    return 0.9 * spread * v.size ** (-0.2)


class _Binned:
    """Linear binning of samples (with boundary reflection) onto a regular grid."""

    def __init__(self, values: np.ndarray, grid: np.ndarray, support):
        x = values
        lo, hi = support if support is not None else (-math.inf, math.inf)
        pieces = [x]
        if math.isfinite(lo):
            pieces.append(2 * lo - x)
        if math.isfinite(hi):
            pieces.append(2 * hi - x)
        self.owner = np.concatenate([np.arange(x.size)] * len(pieces))
        pos = (np.concatenate(pieces) - grid[0]) / (grid[1] - grid[0])
        keep = (pos >= 0) & (pos <= grid.size - 1)
        pos, self.owner = pos[keep], self.owner[keep]
        self.left = np.minimum(np.floor(pos).astype(np.int64), grid.size - 2)
        self.frac = pos - self.left
        self.size = grid.size

    def counts(self, weights=None) -> np.ndarray:
        w = np.ones(self.owner.size) if weights is None else weights[self.owner]
        return (np.bincount(self.left, w * (1 - self.frac), self.size)
                + np.bincount(self.left + 1, w * self.frac, self.size))


def _kde_on_grid(counts: np.ndarray, n: int, h: float, dx: float) -> np.ndarray:
    half = int(math.ceil(6 * h / dx))
    k = np.exp(-0.5 * (np.arange(-half, half + 1) * dx / h) ** 2)
    k /= k.sum()
    return signal.fftconvolve(counts, k, mode="same") / (n * dx)


def tv_empirical_smoothed(a, b, bandwidth: float = None, support=None, n_boot: int = 50,
                          rng: RngStream = None, max_grid: int = 1 << 18) -> EmpiricalDistance:
    """``½∫|p̂_a - p̂_b|`` between Gaussian kernel density estimates.

    A diagnostic only: smoothing biases the estimate and sampling noise
    biases it upward, so it is flagged ``diagnostic=True``.  With ``support``
    given, kernels are reflected at the boundaries so the smoothed laws stay
    on the support.
    """
    a, b = SampleSet.of(a), SampleSet.of(b)
    if bandwidth is None:
        bandwidth = silverman_bandwidth(np.concatenate([a.values, b.values]))
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    h = float(bandwidth)
    lo = min(a.values.min(), b.values.min()) - 6 * h
    hi = max(a.values.max(), b.values.max()) + 6 * h
    if support is not None:
        lo, hi = support
    m = int(min(max(4096, math.ceil((hi - lo) / (h / 8))), max_grid))
    grid = np.linspace(lo, hi, m)
    dx = grid[1] - grid[0]
    ba, bb = _Binned(a.values, grid, support), _Binned(b.values, grid, support)

    def estimate(ca, cb):
        pa = _kde_on_grid(ca, len(a), h, dx)
        pb = _kde_on_grid(cb, len(b), h, dx)
        return min(0.5 * float(np.sum(np.abs(pa - pb))) * dx, 1.0)

    value = estimate(ba.counts(), bb.counts())
    rmse = sd = bias = math.nan
    if n_boot > 0 and min(len(a), len(b)) > 1:
        gen = (rng or RngStream(0)).generator()
        reps = np.array([
            estimate(ba.counts(gen.multinomial(len(a), np.full(len(a), 1.0 / len(a)))),
                     bb.counts(gen.multinomial(len(b), np.full(len(b), 1.0 / len(b)))))
            for _ in range(n_boot)])
        rmse, sd, bias = _rmse(reps, value)
    return EmpiricalDistance(value, min(len(a), len(b)), rmse, "tv", sd, bias,
                             diagnostic=True, bandwidth=h)


def quantile_coupling_distance(x: np.ndarray, y: np.ndarray) -> EmpiricalDistance:
    """Mean of ``|x_i - y_i|`` over coupled pairs, with its plain standard error.

    For a coupling of ``μ`` and ``ν`` this estimates an upper bound on
    ``d_W(μ, ν)`` without the sorting noise floor of two-sample estimates.
    """
    d = np.abs(np.asarray(x, float) - np.asarray(y, float))
    if d.size == 0:
        raise ValueError("empty input")
    se = float(np.std(d, ddof=1) / math.sqrt(d.size)) if d.size > 1 else math.nan
    return EmpiricalDistance(float(d.mean()), d.size, se, "wasserstein", se, 0.0)


def wasserstein_to_tv_constant(B: float, q: float, eps0: float, form: str = "proof") -> float:
    """Constant ``C`` in ``d_TV(mu P^n, pi) <= C * d_W(mu P^(n-1), pi)**(q/(1+q))``.

    Inputs are the small-set exponent ``q``, the mass constant ``B`` and the
    range ``eps0`` of ``pi({h < eps}) <= B eps**q``.  ``form="proof"`` is the
    maximum of the optimized two-term bound and the trivial bound for large
    distances; ``form="printed"`` is the closed form with ``eps0`` entering as
    ``(B**q * eps0)**(-1/(1+q))``.  The two agree when ``eps0 = 1``.
    """
    if not (B > 0 and q > 0 and eps0 > 0):
        raise ValueError("B, q and eps0 must be positive")
    e = q / (1 + q)
    if form == "proof":
        optimized = (q + 1) * (B * q ** -q * 2.0 ** -q) ** (1 / (1 + q))
        trivial = (2 * B * q * eps0 ** (1 + q)) ** -e
        return float(max(optimized, trivial))
    if form == "printed":
        return float((2 * q) ** -e * max((q + 1) * B ** (1 / (1 + q)),
                                         (B ** q * eps0) ** (-1 / (1 + q))))
    raise ValueError(f"unknown form {form!r}")

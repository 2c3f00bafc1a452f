"""Random logistic maps ``x -> 4 B x (1 - x)`` with ``B ~ Beta(a + 1/2, a - 1/2)``.

The stationary law is ``Beta(a, a)``.  Given ``x`` the next state is
``B Q(x)`` with ``Q(x) = 4x(1 - x)``, so the transition density is a scaled
Beta density on ``[0, Q(x)]`` and one-step TV distances have closed forms in
the regularized incomplete Beta function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special, stats

from .ifs import RandomMapSystem, sample_stationary, simulate_forward
from .metrics import (quantile_coupling_distance, tv_empirical_smoothed,
                      wasserstein1_empirical, wasserstein_to_tv_constant)
from .quadrature import DEFAULT, QuadratureSettings, integrate_1d, integrate_algebraic
from .rng import RngStream


@dataclass(frozen=True)
class LogisticModel:
    a: float

    def __post_init__(self):
        if not self.a > 0.5:
            raise ValueError("a must exceed 1/2")

    @property
    def noise_params(self) -> tuple:
        return self.a + 0.5, self.a - 0.5

    def as_dict(self) -> dict:
        return {"a": self.a}


def Q(x):
    x = np.asarray(x, dtype=float)
    return 4.0 * x * (1.0 - x)


def logistic_system(model: LogisticModel) -> RandomMapSystem:
    p, r = model.noise_params
    a = model.a
    return RandomMapSystem(
        name="logistic", params=model.as_dict(), lo=0.0, hi=1.0, noise_dim=1,
        noise_from_uniforms=lambda u: special.betaincinv(p, r, u),
        apply=lambda w, x: 4.0 * np.asarray(w)[..., 0] * x * (1.0 - x),
        local_lipschitz=lambda w, x: 4.0 * np.asarray(w)[..., 0] * np.abs(1.0 - 2.0 * x),
        noise_support=((0.0, 1.0),),
        stationary_from_uniforms=lambda u: special.betaincinv(a, a, u),
        stationary_law=f"Beta({a}, {a})", default_start=0.5)


def _log_k(model: LogisticModel) -> float:
    p, r = model.noise_params
    return -special.betaln(p, r)


def transition_density(model: LogisticModel, x: float, z) -> np.ndarray:
    """``b_x(z) = b(z/Q(x))/Q(x)`` on ``0 <= z <= Q(x)``, zero elsewhere."""
    q = float(Q(x))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    p, r = model.noise_params
    out = np.zeros_like(z)
    inside = (z >= 0) & (z <= q) if q > 0 else np.zeros_like(z, dtype=bool)
    if inside.any():
        out[inside] = stats.beta.pdf(z[inside] / q, p, r) / q
    return out


def transition_cdf(model: LogisticModel, x: float, z) -> np.ndarray:
    p, r = model.noise_params
    q = float(Q(x))
    return special.betainc(p, r, np.clip(np.asarray(z, float) / q, 0.0, 1.0))


def _piece(model: LogisticModel, q: float, lo: float, hi: float, settings) -> float:
    """``∫_lo^hi b_x`` for ``Q(x) = q`` with power-law weights at ``0`` and ``q``."""
    p, r = model.noise_params
    if lo < hi < q and q - hi < hi - lo:
        # panel stops just short of the endpoint singularity
        return _piece(model, q, lo, q, settings) - _piece(model, q, hi, q, settings)
    lk = _log_k(model) - (2 * model.a - 1) * math.log(q)
    left = p - 1 if lo == 0.0 else 0.0
    right = r - 1 if hi == q else 0.0

    def g(z):
        v = lk
        if left == 0.0:
            v += (p - 1) * math.log(z)
        if right == 0.0:
            v += (r - 1) * math.log(q - z)
        return math.exp(v)

    return integrate_algebraic(g, lo, hi, left, right, settings)[0]


def density_mass(model: LogisticModel, x: float, settings: QuadratureSettings = DEFAULT) -> float:
    """``∫ p(x, z) dz`` by quadrature of the density itself.

    The left half integrates the density with a plain adaptive rule; the
    right half carries the ``(Q - z)**(a - 3/2)`` factor as a QAWS weight.
    """
    q = float(Q(x))
    pdf = lambda z: float(transition_density(model, x, z)[0])
    left, _ = integrate_1d(pdf, 0.0, 0.5 * q, None, settings)
    right = _piece(model, q, 0.5 * q, q, settings)
    return left + right


# Q(x) == Q(1 - x) exactly, but not in floating point
Q_TIE = 1e-12


def _crossing(model: LogisticModel, q_small: float, q_big: float) -> Optional[float]:
    """Interior crossing point of ``b_small`` and ``b_big`` (only for a > 3/2)."""
    a = model.a
    if a <= 1.5 or q_small >= q_big:
        return None
    t = q_small / q_big
    s = t ** ((2 * a - 1) / (a - 1.5))
    return q_big * (t - s) / (1 - s)


def exact_one_step_tv(model: LogisticModel, x, y) -> np.ndarray:
    """Closed-form ``d_TV(P(x, .), P(y, .))`` (vectorized).

    With ``t = Q_small/Q_big``: for ``a <= 3/2`` the smaller-support density
    dominates on its whole support and TV is ``1 - I_t(a+1/2, a-1/2)``; for
    ``a > 3/2`` there is a single interior crossing ``z*``.
    """
    p, r = model.noise_params
    qx, qy = Q(x), Q(y)
    qs, qb = np.minimum(qx, qy), np.maximum(qx, qy)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(qb > 0, qs / qb, 1.0)
        if model.a <= 1.5:
            tv = 1.0 - special.betainc(p, r, t)
        else:
            s = t ** ((2 * model.a - 1) / (model.a - 1.5))
            zeta = np.where(t < 1, (t - s) / (1 - s), 1.0)
            tv = special.betainc(p, r, np.clip(zeta / t, 0, 1)) - special.betainc(p, r, zeta)
    return np.where(qb - qs <= Q_TIE * qb, 0.0, np.clip(tv, 0.0, 1.0))


@dataclass(frozen=True)
class LemmaCheck:
    lhs: float
    rhs: float
    exact: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.tolerance

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "exact": self.exact, "holds": self.holds}


def one_step_tv_quadrature(model: LogisticModel, x: float, y: float,
                           settings: QuadratureSettings = DEFAULT) -> float:
    """``½∫|p(x,.) - p(y,.)|`` by panel-wise quadrature.

    Panels end at ``0``, the crossing point, ``Q_small`` and ``Q_big``; the
    sign of the difference is constant on each, and endpoint power laws are
    integrated with algebraic weights.
    """
    qs, qb = sorted((float(Q(x)), float(Q(y))))
    if qb - qs <= Q_TIE * qb:
        return 0.0
    cuts = [0.0, qs, qb]
    zc = _crossing(model, qs, qb)
    if zc is not None and 0 < zc < qs:
        cuts.insert(1, zc)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        small = _piece(model, qs, lo, hi, settings) if hi <= qs else 0.0
        big = _piece(model, qb, lo, hi, settings)
        total += abs(small - big)
    return 0.5 * total


def lemma_logwass_check(model: LogisticModel, x: float, y: float,
                        settings: QuadratureSettings = DEFAULT, tolerance: float = 1e-8,
                        strict: bool = True) -> LemmaCheck:
    """``½∫|p(x,.) - p(y,.)|`` against ``8a|y - x| / max(Q(x), Q(y))``.

    Also cross-checks the quadrature against the closed form.  With
    ``strict`` a violated inequality raises; otherwise inspect ``holds``.
    The inequality can fail for ``a < 3/2``, where the transition density
    is unbounded at ``z = Q(x)`` and the distance behaves like
    ``|x - y|**(a - 1/2)`` for nearby points.
    """
    if not (0 < x < 1 and 0 < y < 1):
        raise ValueError("x and y must lie in (0, 1)")
    lhs = one_step_tv_quadrature(model, x, y, settings)
    exact = float(exact_one_step_tv(model, x, y))
    if abs(lhs - exact) > 1e-7:
        raise AssertionError(f"quadrature {lhs} disagrees with closed form {exact}")
    rhs = 8 * model.a * abs(y - x) / max(float(Q(x)), float(Q(y)))
    chk = LemmaCheck(lhs, rhs, exact, tolerance)
    if strict and not chk.holds:
        raise AssertionError(f"one-step TV lemma violated at x={x}, y={y}: {chk}")
    return chk


# ---------------------------------------------------------------------------
# Constants


@dataclass(frozen=True)
class LogisticConstants:
    """Small-set and conversion constants for ``h(y) = Q(y)/(16a)``.

    ``B`` is the printed mass constant and ``B_corrected = 2 B`` the value
    that keeps the factor from the two symmetric tails.  ``C_tilde_a`` uses
    the printed closed form with ``B``; ``C_tilde_a_proof`` the form of the
    optimization argument with ``B``; ``C_tilde_a_corrected`` the latter with
    ``B_corrected``.
    """

    a: float
    q: float
    B: float
    B_corrected: float
    eps0: float
    K_a: float
    K_tilde_a: float
    C_tilde_a: float
    C_tilde_a_proof: float
    C_tilde_a_corrected: float
    exponent: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def compute_logistic_constants(model: LogisticModel) -> LogisticConstants:
    a = model.a
    k_tilde = math.exp(special.gammaln(2 * a) - 2 * special.gammaln(a))
    if a >= 1:
        B = k_tilde * 8 ** a * a ** (a - 1)
    else:
        B = 2 * k_tilde * 4 ** a * a ** (a - 1)
    eps0 = 1 / (16 * a)
    return LogisticConstants(
        a=a, q=a, B=B, B_corrected=2 * B, eps0=eps0, K_a=math.exp(_log_k(model)),
        K_tilde_a=k_tilde,
        C_tilde_a=wasserstein_to_tv_constant(B, a, eps0, "printed"),
        C_tilde_a_proof=wasserstein_to_tv_constant(B, a, eps0, "proof"),
        C_tilde_a_corrected=wasserstein_to_tv_constant(2 * B, a, eps0, "proof"),
        exponent=a / (a + 1))


def tv_from_wasserstein_logistic(model: LogisticModel, wasserstein_at: Callable[[int], float],
                                 constants: str = "corrected") -> Callable[[int], float]:
    """``n -> C * wasserstein_at(n - 1)**(a/(a+1))`` for ``n >= 1``.

    The constant is implementation-derived (no printed value exists):
    ``constants`` selects ``"corrected"`` (default), ``"proof"`` or ``"printed"``.
    """
    c = compute_logistic_constants(model)
    C = {"corrected": c.C_tilde_a_corrected, "proof": c.C_tilde_a_proof,
         "printed": c.C_tilde_a}[constants]

    def bound(n: int) -> float:
        if n < 1:
            raise ValueError("TV bound defined for n >= 1")
        w = wasserstein_at(n - 1)
        return C * max(w, 0.0) ** c.exponent

    bound.constant = C
    bound.provenance = f"constant derived from the W-to-TV conversion ({constants}), not printed"
    return bound


@dataclass(frozen=True)
class SmallSetResult:
    epsilon: float
    mass_cover: float
    mass_exact: float
    bound: float
    bound_corrected: float

    @property
    def holds(self) -> bool:
        return self.mass_cover <= self.bound

    @property
    def holds_corrected(self) -> bool:
        return self.mass_cover <= self.bound_corrected

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d.update(holds=self.holds, holds_corrected=self.holds_corrected,
                 exact_holds=self.mass_exact <= self.bound)
        return d


def small_set_mass_check(model: LogisticModel, epsilons: Sequence[float]) -> list:
    """Stationary mass of ``{h <= eps}`` against ``B eps**a``.

    ``mass_cover`` is ``2 * F_{Beta(a,a)}(8 a eps)``, the mass of the two
    covering end intervals; ``mass_exact`` is the mass of the set itself.
    Failures are returned, not raised: they are findings about the constant.
    """
    c = compute_logistic_constants(model)
    a = model.a
    out = []
    for e in epsilons:
        if not 0 < e <= c.eps0 * (1 + 1e-12):
            raise ValueError(f"epsilon must lie in (0, 1/(16a)] = (0, {c.eps0}]")
        cover = 2 * float(special.betainc(a, a, min(8 * a * e, 0.5)))
        ystar = 0.5 * (1 - math.sqrt(max(0.0, 1 - 16 * a * e)))
        exact = 2 * float(special.betainc(a, a, ystar))
        out.append(SmallSetResult(e, cover, exact, c.B * e ** a, c.B_corrected * e ** a))
    return out


# ---------------------------------------------------------------------------
# Decay-rate experiment


@dataclass(frozen=True)
class RateFit:
    """Log-linear fit ``log d_n ≈ c + n log(rho)`` with a confidence band on ``log rho``."""

    slope: float
    slope_se: float
    lo: float
    hi: float
    n_points: int

    @property
    def rate(self) -> float:
        return math.exp(self.slope)

    def as_dict(self) -> dict:
        return {"rate": self.rate, "log_rate": self.slope, "log_rate_se": self.slope_se,
                "band": [math.exp(self.lo), math.exp(self.hi)], "n_points": self.n_points}


def fit_decay_rate(n, values, level: float = 0.95) -> RateFit:
    n = np.asarray(n, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > 0
    if keep.sum() < 3:
        raise ValueError("need at least three positive values to fit a rate")
    res = stats.linregress(n[keep], np.log(v[keep]))
    tq = stats.t.ppf(0.5 + level / 2, keep.sum() - 2)
    return RateFit(res.slope, res.stderr, res.slope - tq * res.stderr,
                   res.slope + tq * res.stderr, int(keep.sum()))


def coupling_decay(model: LogisticModel, x0: float, n_values: Sequence[int], replicas: int,
                   rng: RngStream) -> dict:
    """Coupling estimates of ``d_W`` and ``d_TV`` between ``P^n(x0, .)`` and ``pi``.

    One chain starts at ``x0``, the other at an exact ``Beta(a, a)`` draw, and
    both use the same maps.  ``mean|S_n - S'_n|`` bounds ``d_W`` from above,
    and the mean exact one-step TV between ``S_{n-1}`` and ``S'_{n-1}`` bounds
    ``d_TV`` at step ``n``.  Neither estimate has the sampling noise floor
    of two-sample distances.
    """
    system = logistic_system(model)
    n_values = sorted(set(int(v) for v in n_values))
    if n_values[0] < 1:
        raise ValueError("n values must be >= 1")
    want_w, want_tv = set(n_values), {n - 1 for n in n_values}
    x = np.full(replicas, float(x0))
    y = sample_stationary(system, "exact", replicas, rng).values
    w_est, tv_est = {}, {}
    for t in range(0, max(n_values) + 1):
        if t > 0:
            noise = system.sample_noise(rng, t, replicas)
            x, y = system.apply(noise, x), system.apply(noise, y)
            system.check_states(x, t)
            system.check_states(y, t)
        if t in want_w:
            w_est[t] = quantile_coupling_distance(x, y)
        if t in want_tv:
            d = exact_one_step_tv(model, x, y)
            se = float(d.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else math.nan
            tv_est[t + 1] = (float(d.mean()), se)
    return {"n": n_values,
            "wasserstein": [w_est[n].value for n in n_values],
            "wasserstein_se": [w_est[n].std_error for n in n_values],
            "tv": [tv_est[n][0] for n in n_values],
            "tv_se": [tv_est[n][1] for n in n_values]}


def rate_transfer_check(model: LogisticModel, x0: float = 0.3, n_lo: int = 10, n_hi: int = 60,
                        replicas: int = 100_000, rng: RngStream = None,
                        n_values: Optional[Sequence[int]] = None) -> dict:
    """Fitted TV decay rate against the fitted Wasserstein rate to the ``a/(a+1)``.

    Passes when the lower band of the TV log-rate does not exceed
    ``a/(a+1)`` times the upper band of the Wasserstein log-rate.
    ``n_values`` overrides the range ``n_lo..n_hi``.
    """
    rng = rng or RngStream(20080701)
    n = sorted(set(int(v) for v in n_values)) if n_values is not None else list(range(n_lo, n_hi + 1))
    n_lo, n_hi = n[0], n[-1]
    data = coupling_decay(model, x0, n, replicas, rng)
    fw = fit_decay_rate(n, data["wasserstein"])
    ft = fit_decay_rate(n, data["tv"])
    e = model.a / (model.a + 1)
    return {"a": model.a, "x0": x0, "n_range": [n_lo, n_hi], "replicas": replicas,
            "wasserstein_fit": fw.as_dict(), "tv_fit": ft.as_dict(),
            "transferred_rate": fw.rate ** e, "transferred_band_hi": math.exp(e * fw.hi),
            "pass": bool(ft.lo <= e * fw.hi), "data": data}


def sample_based_decay(model: LogisticModel, x0: float, n_values: Sequence[int], replicas: int,
                       rng: RngStream, bandwidth: Optional[float] = None) -> dict:
    """Two-sample W1 and smoothed TV between forward samples and fresh ``Beta(a, a)`` draws.

    Both estimates flatten at the sampling noise floor after a few steps,
    so rates fitted from them are diagnostics only.
    """
    system = logistic_system(model)
    n_values = sorted(set(int(v) for v in n_values))
    fwd = simulate_forward(system, x0, max(n_values), rng.child(1), replicas, record=n_values)
    ref = sample_stationary(system, "exact", replicas, rng.child(2)).values
    w, tv = [], []
    for n in n_values:
        w.append(wasserstein1_empirical(fwd[n], ref, 0).value)
        tv.append(tv_empirical_smoothed(fwd[n], ref, bandwidth, support=(0.0, 1.0), n_boot=0).value)
    return {"n": n_values, "wasserstein": w, "tv_smoothed": tv}

"""Adaptive quadrature helpers (QUADPACK via scipy) with explicit failure reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSettings:
    epsabs: float = 1e-10
    epsrel: float = 1e-10
    limit: int = 500
    # Accept a QUADPACK roundoff warning if its error estimate is below this.
    accept_error: float = 1e-8


DEFAULT = QuadratureSettings()


def _quad(f, lo, hi, settings: QuadratureSettings, **kw) -> tuple[float, float]:
    val, err, _info, *warning = integrate.quad(
        f, lo, hi, epsabs=settings.epsabs, epsrel=settings.epsrel,
        limit=settings.limit, full_output=1, **kw)
    # A fourth element is QUADPACK's warning message (ier > 0).
    if not math.isfinite(val) or (warning and err > settings.accept_error):
        raise QuadratureError(f"quadrature on [{lo}, {hi}] failed: value={val}, error={err}")
    return float(val), float(err)


def integrate_1d(f, lo: float, hi: float, points=None, settings: QuadratureSettings = DEFAULT):
    """``∫_lo^hi f``; finite breakpoints split the range, infinite ends use QAGI.

    Returns ``(value, error_estimate)``.
    """
    pts = sorted({float(p) for p in (points or ()) if lo < p < hi and math.isfinite(p)})
    edges = [lo] + pts + [hi]
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if a == b:
            continue
        v, e = _quad(f, a, b, settings)
        total += v
        err += e
    return total, err


def integrate_endpoint_singular(g, lo: float, hi: float, exponent: float, side: str = "right",
                                settings: QuadratureSettings = DEFAULT):
    """``∫_lo^hi w(z) g(z) dz`` with the algebraic weight ``w = (hi - z)**exponent``.

    ``side="left"`` uses ``(z - lo)**exponent`` instead.  ``exponent > -1``;
    ``g`` must be smooth on the closed panel.  This is the QAWS rule, which
    integrates the power-law singularity exactly.
    """
    if exponent <= -1:
        raise ValueError("endpoint exponent must exceed -1 for integrability")
    wvar = (0.0, exponent) if side == "right" else (exponent, 0.0)
    return _quad(g, lo, hi, settings, weight="alg", wvar=wvar)


@lru_cache(maxsize=8)
def gauss_hermite_e(n: int = 80):
    """Nodes and weights for ``E[g(T)]``, ``T ~ N(0, 1)`` (read-only arrays)."""
    x, w = np.polynomial.hermite_e.hermegauss(n)
    w = w / math.sqrt(2.0 * math.pi)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def integrate_algebraic(g, lo: float, hi: float, left_exp: float = 0.0, right_exp: float = 0.0,
                        settings: QuadratureSettings = DEFAULT):
    """``∫_lo^hi (z - lo)**left_exp (hi - z)**right_exp g(z) dz`` (QAWS).

    Both exponents must exceed -1.  Zero exponents reduce to a plain weight.
    """
    if left_exp <= -1 or right_exp <= -1:
        raise ValueError("endpoint exponents must exceed -1 for integrability")
    if left_exp == 0 and right_exp == 0:
        return _quad(g, lo, hi, settings)
    return _quad(g, lo, hi, settings, weight="alg", wvar=(left_exp, right_exp))

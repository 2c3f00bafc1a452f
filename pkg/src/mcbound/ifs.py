"""Iterated random function systems: forward, backward and coupled iteration.

A system is a family of random maps ``f_w`` on an open interval.  Each map
application consumes one noise vector ``w`` built from ``noise_dim`` uniforms
of an :class:`~mcbound.rng.RngStream`.  Replica ``i`` of a simulation always
uses the uniforms at offset ``i`` of each step, which makes every result
independent of chunking and worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .rng import PURPOSE_STATIONARY, RngStream

# Endpoint guard: states this close to a finite boundary count as escapes.
BOUNDARY_GUARD = 1e-300

# Replicas per work unit. A multiple of 4 keeps Philox blocks aligned.
CHUNK = 16384


class StateEscapeError(ValueError):
    """A state left the open state space (mis-specified system or degenerate draw)."""


class NonFiniteStateError(StateEscapeError, ArithmeticError):
    """A state overflowed to inf or became NaN."""


class StationaryUnavailableError(LookupError):
    """Exact stationary sampling was requested but the system has no exact sampler."""


@dataclass(frozen=True)
class RandomMapSystem:
    """A parametrized family of random maps on the interval ``(lo, hi)``.

    ``apply(noise, x)`` and ``local_lipschitz(noise, x)`` are vectorized:
    ``noise`` has trailing dimension ``noise_dim`` and broadcasts against ``x``.
    ``noise_from_uniforms`` turns an ``(R, noise_dim)`` array of uniforms into
    noise with a fixed budget of one uniform per component.
    """

    name: str
    params: dict
    lo: float
    hi: float
    noise_dim: int
    noise_from_uniforms: Callable[[np.ndarray], np.ndarray]
    apply: Callable[[np.ndarray, np.ndarray], np.ndarray]
    local_lipschitz: Callable[[np.ndarray, np.ndarray], np.ndarray]
    noise_support: tuple = ()
    stationary_from_uniforms: Optional[Callable[[np.ndarray], np.ndarray]] = None
    stationary_law: str = ""
    default_start: float = 1.0

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        ok = np.isfinite(x)
        if math.isfinite(self.lo):
            ok &= (x - self.lo) > BOUNDARY_GUARD
        if math.isfinite(self.hi):
            ok &= (self.hi - x) > BOUNDARY_GUARD
        return ok

    def sample_noise(self, rng: RngStream, step: int, count: int, offset: int = 0) -> np.ndarray:
        u = rng.uniforms(step, count, self.noise_dim, offset)
        return self.noise_from_uniforms(u)

    def check_noise(self, noise) -> np.ndarray:
        noise = np.asarray(noise, dtype=float)
        if noise.shape[-1] != self.noise_dim:
            raise ValueError(f"{self.name}: noise has {noise.shape[-1]} components, "
                             f"expected {self.noise_dim}")
        for k, (lo, hi) in enumerate(self.noise_support):
            c = noise[..., k]
            if np.any(~np.isfinite(c)) or np.any(c <= lo) or np.any(c >= hi):
                raise ValueError(f"{self.name}: noise component {k} outside ({lo}, {hi})")
        return noise

    def check_states(self, x, step: int) -> None:
        x = np.asarray(x)
        bad = ~self.contains(x)
        if not bad.any():
            return
        idx = int(np.flatnonzero(bad.ravel())[0])
        val = float(x.ravel()[idx])
        cls = NonFiniteStateError if not math.isfinite(val) else StateEscapeError
        raise cls(f"{self.name}: state {val!r} escaped ({self.lo}, {self.hi}) "
                  f"at step {step} (replica {idx})")

    def describe(self) -> dict:
        return {"system": self.name, "params": dict(self.params)}


@dataclass
class Trajectory:
    """States ``S_0..S_n`` of one forward path."""

    start: float
    states: np.ndarray
    draws_used: int
    noise: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self):
        return len(self.states)

    def columns(self) -> dict:
        cols = {"t": np.arange(len(self.states)), "state": self.states}
        if self.noise is not None:
            for k in range(self.noise.shape[1]):
                cols[f"noise_{k}"] = np.concatenate([[np.nan], self.noise[:, k]])
        return cols


def _as_start(system: RandomMapSystem, x0) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    system.check_states(x, step=0)
    return x


def _chunked(count: int, fn: Callable[[int, int], object], workers: int) -> list:
    spans = [(s, min(CHUNK, count - s)) for s in range(0, count, CHUNK)]
    if workers <= 1 or len(spans) <= 1:
        return [fn(s, c) for s, c in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda sc: fn(*sc), spans))


def _broadcast_start(x0, count: int) -> np.ndarray:
    x = np.asarray(x0, dtype=float)
    if x.ndim == 0:
        return np.full(count, float(x))
    if x.shape != (count,):
        raise ValueError(f"start array has shape {x.shape}, expected ({count},)")
    return x


def simulate_forward(system: RandomMapSystem, x0, n: int, rng: RngStream, replicas: int = None,
                     record: Sequence[int] = None, workers: int = 1, offset: int = 0):
    """Run ``replicas`` independent forward chains for ``n`` steps.

    Returns the endpoints, or a dict ``{step: states}`` for the steps in
    ``record``.  ``x0`` may be a scalar or one start per replica.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if replicas is None:
        replicas = np.size(x0)
    start = _broadcast_start(x0, replicas)
    system.check_states(start, step=0)
    keep = sorted(set(record)) if record is not None else None
    if keep is not None and any(k < 0 or k > n for k in keep):
        raise ValueError("record steps must lie in [0, n]")

    def run(s, c):
        x = start[s:s + c].copy()
        out = {0: x.copy()} if keep and 0 in keep else {}
        for t in range(1, n + 1):
            x = system.apply(system.sample_noise(rng, t, c, offset + s), x)
            system.check_states(x, t)
            if keep and t in keep:
                out[t] = x.copy()
        return out if keep is not None else x

    parts = _chunked(replicas, run, workers)
    if keep is None:
        return np.concatenate(parts) if parts else np.empty(0)
    return {k: np.concatenate([p[k] for p in parts]) for k in keep}


def simulate_backward(system: RandomMapSystem, x0, n: int, rng: RngStream, replicas: int = None,
                      workers: int = 1, offset: int = 0) -> np.ndarray:
    """``F_n(x0) = f_1(f_2(...f_n(x0)))`` per replica, replaying step ``n`` first."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if replicas is None:
        replicas = np.size(x0)
    start = _broadcast_start(x0, replicas)
    system.check_states(start, step=0)

    def run(s, c):
        x = start[s:s + c].copy()
        for t in range(n, 0, -1):
            x = system.apply(system.sample_noise(rng, t, c, offset + s), x)
            system.check_states(x, t)
        return x

    parts = _chunked(replicas, run, workers)
    return np.concatenate(parts) if parts else np.empty(0)


def simulate_coupled(system: RandomMapSystem, x0, y0, n: int, rng: RngStream, replicas: int = None,
                     record: Sequence[int] = None, workers: int = 1, offset: int = 0):
    """Two forward chains driven by identical draws (synchronous coupling).

    Returns ``(x_n, y_n)`` or ``({step: x}, {step: y})`` when ``record`` is given.
    """
    if replicas is None:
        replicas = max(np.size(x0), np.size(y0))
    xs = _broadcast_start(x0, replicas)
    ys = _broadcast_start(y0, replicas)
    # Same offset for both copies: replica i of each sees identical draws.
    fx = simulate_forward(system, xs, n, rng, replicas, record, workers, offset)
    fy = simulate_forward(system, ys, n, rng, replicas, record, workers, offset)
    return fx, fy


def _fixed_noise(system: RandomMapSystem, noise, n: int) -> np.ndarray:
    noise = np.asarray(noise, dtype=float)
    if noise.ndim == 1:
        noise = np.broadcast_to(noise, (n, system.noise_dim))
    if noise.shape != (n, system.noise_dim):
        raise ValueError(f"injected noise must have shape ({n}, {system.noise_dim})")
    return system.check_noise(noise)


def forward_iterate(system: RandomMapSystem, x0: float, n: int, rng: RngStream = None,
                    noise=None) -> Trajectory:
    """One forward path ``S_t = f_t(S_{t-1})``, ``t = 1..n``.

    Draws come from replica 0 of ``rng`` unless ``noise`` (one row per step,
    or a single row repeated) is injected.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    x = float(_as_start(system, x0)[0])
    if noise is None:
        if rng is None:
            raise ValueError("either rng or noise is required")
        rows = [system.sample_noise(rng, t, 1)[0] for t in range(1, n + 1)]
        noise = np.array(rows).reshape(n, system.noise_dim)
    else:
        noise = _fixed_noise(system, noise, n)
    states = np.empty(n + 1)
    states[0] = x
    for t in range(1, n + 1):
        x = float(system.apply(noise[t - 1], np.float64(x)))
        system.check_states(np.array([x]), t)
        states[t] = x
    return Trajectory(start=states[0], states=states, draws_used=n, noise=noise)


def backward_iterate(system: RandomMapSystem, x0: float, n: int, rng: RngStream = None,
                     noise=None) -> float:
    """``F_n(x0) = f_1 ∘ f_2 ∘ ... ∘ f_n (x0)`` using draws indexed ``1..n``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = float(_as_start(system, x0)[0])
    if noise is not None:
        noise = _fixed_noise(system, noise, n)
    for t in range(n, 0, -1):
        w = noise[t - 1] if noise is not None else system.sample_noise(rng, t, 1)[0]
        x = float(system.apply(w, np.float64(x)))
        system.check_states(np.array([x]), t)
    return x


def coupled_forward(system: RandomMapSystem, x0: float, y0: float, n: int,
                    rng: RngStream = None, noise=None) -> tuple[Trajectory, Trajectory]:
    """Two forward paths from ``x0`` and ``y0`` sharing every map ``f_t``."""
    a = forward_iterate(system, x0, n, rng, noise)
    b = forward_iterate(system, y0, n, noise=a.noise)
    return a, b


@dataclass
class StationarySample:
    values: np.ndarray
    method: str
    converged: bool
    n_burn: Optional[int] = None
    certificate: Optional[float] = None


def sample_stationary(system: RandomMapSystem, method: str = "exact", count: int = 1,
                      rng: RngStream = None, n_burn: int = None, x0: float = None,
                      bound: Callable[[int], float] = None, workers: int = 1) -> StationarySample:
    """Draw from the stationary law.

    ``method="exact"`` uses the system's registered sampler.  ``"backward"``
    returns ``F_{n_burn}(x0)`` per replica; ``bound``, when given, maps
    ``n_burn`` to an analytic Wasserstein certificate for the approximation.
    """
    if rng is None:
        raise ValueError("rng is required")
    if method == "exact":
        if system.stationary_from_uniforms is None:
            raise StationaryUnavailableError(f"{system.name} has no exact stationary sampler")
        u = rng.uniforms(0, count, 1, purpose=PURPOSE_STATIONARY)[:, 0]
        return StationarySample(system.stationary_from_uniforms(u), "exact", True)
    if method == "backward":
        if n_burn is None or n_burn < 0:
            raise ValueError("backward sampling needs n_burn >= 0")
        start = system.default_start if x0 is None else x0
        vals = simulate_backward(system, start, n_burn, rng, replicas=count, workers=workers)
        cert = float(bound(n_burn)) if (bound is not None and n_burn >= 1) else None
        return StationarySample(vals, "backward", n_burn >= 1, n_burn, cert)
    raise ValueError(f"unknown method {method!r}")


def write_csv(columns: dict, path=None) -> str:
    """Write equal-length columns with a header row; returns the CSV text."""
    names = list(columns)
    cols = [np.asarray(columns[k]).ravel() for k in names]
    if len({len(c) for c in cols}) > 1:
        raise ValueError("columns have different lengths")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*cols):
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_csv(path_or_text) -> dict:
    """Inverse of :func:`write_csv` for numeric columns (path or CSV text)."""
    if "\n" in str(path_or_text):
        text = str(path_or_text)
    else:
        with open(path_or_text) as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    names, body = rows[0], rows[1:]
    return {k: np.array([float(r[i]) for r in body]) for i, k in enumerate(names)}


def json_envelope(system: RandomMapSystem, rng: RngStream, data) -> dict:
    """The ``{system, params, seed, stream_id, data}`` wrapper for saved runs."""
    if isinstance(data, Trajectory):
        data = {k: np.asarray(v).tolist() for k, v in data.columns().items()}
    elif isinstance(data, StationarySample):
        data = {"values": data.values.tolist(), "method": data.method,
                "converged": data.converged, "n_burn": data.n_burn,
                "certificate": data.certificate}
    elif isinstance(data, np.ndarray):
        data = data.tolist()
    env = system.describe()
    env.update(rng.as_dict())
    env["data"] = data
    return env


def dumps(obj) -> str:
    """Canonical JSON (sorted keys, NaN as null) so equal runs give equal bytes."""
    return json.dumps(_clean(obj), sort_keys=True, indent=2)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj

"""Seeded simulation of the point-process models by intensity thinning.

All simulators take an integer seed and an optional stream index. Stream
``i`` of seed ``s`` is an independent Philox generator keyed by ``(s, i)``,
so an ensemble gives the same realisations in any execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, TypeVar

import numba
import numpy as np
from scipy.special import erf

from .exceptions import ParameterError, SimulationError
from .paths import EventPath, TimeWindow


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for realisation ``stream`` of ``seed``."""
    if seed < 0 or stream < 0:
        raise ParameterError("seed and stream must be nonnegative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


_R = TypeVar("_R")


def run_ensemble(task: Callable[[int], _R], n_realisations: int, threads: int = 1) -> list[_R]:
    """Run ``task(i)`` for ``i = 0 .. n-1`` and return the results in index order.

    Each task should derive its randomness from stream ``i``, so the results
    do not depend on ``threads``. The numba kernels release the GIL, which
    lets threads overlap the heavy work.
    """
    if threads < 1:
        raise ParameterError("threads must be at least 1")
    if threads == 1 or n_realisations < 2:
        return [task(i) for i in range(n_realisations)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, range(n_realisations)))


# ---------------------------------------------------------------------------
# Parameter types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RefractoryParams:
    """Poisson process with rate ``mu`` that is silenced for ``delta_x`` after each event."""

    mu: float
    delta_x: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.mu) and self.mu > 0):
            raise ParameterError("mu must be positive")
        if not (np.isfinite(self.delta_x) and self.delta_x >= 0):
            raise ParameterError("delta_x must be nonnegative")


@dataclass(frozen=True)
class PhaseDistribution:
    """Distribution of the drive phase on ``[0, period)``.

    Use the constructors :meth:`delta`, :meth:`uniform` and :meth:`tabulated`.
    A tabulated density is piecewise constant on ``len(density)`` equal cells.
    """

    kind: str
    location: float = 0.0
    density: np.ndarray | None = field(default=None, compare=False)

    @classmethod
    def delta(cls, location: float = 0.0) -> "PhaseDistribution":
        return cls("delta", float(location))

    @classmethod
    def uniform(cls) -> "PhaseDistribution":
        return cls("uniform")

    @classmethod
    def tabulated(cls, density) -> "PhaseDistribution":
        d = np.asarray(density, dtype=float).ravel()
        if d.size < 2 or np.any(d < 0) or not np.all(np.isfinite(d)) or d.sum() <= 0:
            raise ParameterError("tabulated phase density must be nonnegative with positive mass")
        return cls("tabulated", 0.0, d)

    def __post_init__(self) -> None:
        if self.kind not in ("delta", "uniform", "tabulated"):
            raise ParameterError(f"unknown phase distribution kind {self.kind!r}")
        if self.kind == "tabulated" and self.density is None:
            raise ParameterError("tabulated phase distribution needs a density")

    def cell_masses(self, n_cells: int, period: float) -> np.ndarray:
        """Probability of each of ``n_cells`` equal phase cells on ``[0, period)``."""
        if self.kind == "uniform":
            return np.full(n_cells, 1.0 / n_cells)
        if self.kind == "delta":
            p = np.zeros(n_cells)
            p[int(math.floor((self.location % period) / period * n_cells)) % n_cells] = 1.0
            return p
        d = self.density / self.density.sum()
        if d.size == n_cells:
            return d.copy()
        # Resample the piecewise-constant density onto the requested cells.
        edges_src = np.linspace(0.0, 1.0, d.size + 1)
        cdf_src = np.concatenate([[0.0], np.cumsum(d)])
        cdf = np.interp(np.linspace(0.0, 1.0, n_cells + 1), edges_src, cdf_src)
        return np.diff(cdf)

    def sample(self, rng: np.random.Generator, period: float) -> float:
        if self.kind == "delta":
            return float(self.location % period)
        if self.kind == "uniform":
            return float(rng.uniform(0.0, period))
        d = self.density / self.density.sum()
        cell = int(rng.choice(d.size, p=d))
        return float((cell + rng.uniform()) * period / d.size)


@dataclass(frozen=True)
class EventDrivenParams:
    """Periodic drive with at most one response spike per window.

    Parameters
    ----------
    c : float
        Probability of a spike in each window.
    delta_x : float
        Window length, also the refractory period.
    delta_y : float
        Drive period; must exceed ``2 * delta_x``.
    phase_dist : PhaseDistribution
        Distribution of the drive phase.
    """

    c: float
    delta_x: float
    delta_y: float
    phase_dist: PhaseDistribution = field(default_factory=PhaseDistribution.uniform)

    def __post_init__(self) -> None:
        if not (0.0 <= self.c <= 1.0):
            raise ParameterError("c must lie in [0, 1]")
        if not (self.delta_x > 0 and self.delta_y > 0):
            raise ParameterError("delta_x and delta_y must be positive")
        if not 2.0 * self.delta_x < self.delta_y:
            raise ParameterError("event-driven model requires 2*delta_x < delta_y")

    @property
    def bound(self) -> float:
        """Supremum of the conditional intensity (infinite when ``c == 1``)."""
        if self.c >= 1.0:
            return math.inf
        return self.c / (self.delta_x * (1.0 - self.c))


@dataclass(frozen=True)
class CoupledSpikingParams:
    """Poisson drive ``Y`` modulating ``X`` through a Gaussian bump in ``t^y``."""

    lambda_y: float = 1.0
    lambda_base: float = 0.5
    m: float = 5.0
    sigma: float = 0.1
    t_cut: float = 1.0

    def __post_init__(self) -> None:
        for name in ("lambda_y", "lambda_base", "sigma", "t_cut"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive")
        if not (np.isfinite(self.m) and self.m >= 0):
            raise ParameterError("m must be nonnegative")
        s = np.linspace(0.0, self.t_cut, 2001)
        if coupled_intensity(s, self).min() < 0:
            raise ParameterError("conditional intensity becomes negative")

    @property
    def bound(self) -> float:
        return self.lambda_base + self.m


# ---------------------------------------------------------------------------
# Closed-form intensities
# ---------------------------------------------------------------------------


def coupled_intensity(ty, params: CoupledSpikingParams) -> np.ndarray:
    """Intensity of ``X`` given the time ``ty`` since the last ``Y`` spike.

    Non-finite ``ty`` (no ``Y`` spike yet) gives the base rate.
    """
    s = np.asarray(ty, dtype=float)
    c = 0.5 * params.t_cut
    two_var = 2.0 * params.sigma ** 2
    inside = np.isfinite(s) & (s > 0) & (s <= params.t_cut)
    sv = np.where(inside, s, c)
    bump = params.m * (np.exp(-((sv - c) ** 2) / two_var) - math.exp(-(c ** 2) / two_var))
    return params.lambda_base + np.where(inside, bump, 0.0)


def coupled_cumulative(ty, params: CoupledSpikingParams) -> np.ndarray:
    """Integral of :func:`coupled_intensity` from 0 to ``ty``."""
    s = np.asarray(ty, dtype=float)
    return _cum_intensity_vec(s, params.lambda_base, params.m, params.sigma, params.t_cut)


def _cum_intensity_vec(s, lam_base, m, sigma, t_cut):
    c = 0.5 * t_cut
    r2s = math.sqrt(2.0) * sigma
    floor = math.exp(-(c ** 2) / (2.0 * sigma ** 2))
    sc = np.minimum(s, t_cut)
    bump = m * (sigma * math.sqrt(math.pi / 2.0) * (erf((sc - c) / r2s) + erf(c / r2s)) - floor * sc)
    return lam_base * s + bump


FIG2_PARAMS = CoupledSpikingParams(lambda_y=1.0, lambda_base=0.5, m=5.0, sigma=0.1, t_cut=1.0)


# ---------------------------------------------------------------------------
# Simulators
# ---------------------------------------------------------------------------


def simulate_thinning(intensity: Callable[[float, np.ndarray], float], bound: float,
                      window: TimeWindow, seed: int, stream: int = 0) -> EventPath:
    """Thinning for a history-dependent intensity.

    Parameters
    ----------
    intensity : callable
        ``intensity(t, history)`` where ``history`` holds the accepted events
        before ``t``. It must never exceed ``bound``.
    bound : float
        Dominating constant rate.
    window : TimeWindow
        Events are generated on ``[t0, t_end]``; no events precede ``t0``.
    seed, stream : int
        Generator key.
    """
    if not (bound >= 0 and np.isfinite(bound)):
        raise ParameterError("bound must be finite and nonnegative")
    rng = make_rng(seed, stream)
    events: list[float] = []
    if bound == 0:
        return EventPath(window, np.empty(0))
    t = window.t0
    while True:
        t += rng.exponential(1.0 / bound)
        if t > window.t_end:
            break
        lam = float(intensity(t, np.asarray(events)))
        if lam > bound * (1 + 1e-12):
            raise SimulationError(f"intensity {lam} exceeds thinning bound {bound} at t={t}")
        if rng.uniform() * bound < lam:
            events.append(t)
    return EventPath(window, np.asarray(events))


def simulate_poisson(rate: float, window: TimeWindow, seed: int, stream: int = 0) -> EventPath:
    """Homogeneous Poisson process on ``[t0, t_end]``."""
    if rate < 0:
        raise ParameterError("rate must be nonnegative")
    rng = make_rng(seed, stream)
    return EventPath(window, _poisson_times(rng, rate, window.t0, window.t_end))


def _poisson_times(rng: np.random.Generator, rate: float, a: float, b: float) -> np.ndarray:
    n = rng.poisson(rate * (b - a))
    t = np.sort(rng.uniform(a, b, size=n))
    # Ties have probability zero but guard the strict-order invariant anyway.
    return np.unique(t)


@numba.njit(cache=True)
def _refractory_accept(cand, delta_x):
    out = np.empty_like(cand)
    n = 0
    last = -np.inf
    for t in cand:
        if t - last >= delta_x:
            out[n] = t
            n += 1
            last = t
    return out[:n]


def simulate_refractory(params: RefractoryParams, window: TimeWindow, seed: int,
                        stream: int = 0) -> EventPath:
    """Refractory Poisson process; no event precedes ``t0``.

    Candidates from a rate-``mu`` Poisson process are accepted when at least
    ``delta_x`` has elapsed since the last accepted event. The acceptance
    probability of thinning is 0 or 1 here, so no uniforms are needed.
    """
    rng = make_rng(seed, stream)
    cand = _poisson_times(rng, params.mu, window.t0, window.t_end)
    return EventPath(window, _refractory_accept(cand, params.delta_x))


def event_driven_intensity(u, c: float, delta_x: float) -> np.ndarray:
    """Conditional intensity at time ``u`` into a window that has not yet spiked."""
    u = np.asarray(u, dtype=float)
    inside = (u >= 0) & (u < delta_x)
    denom = np.where(inside, delta_x - c * u, 1.0)
    return np.where(inside, c / denom, 0.0)


def simulate_event_driven(params: EventDrivenParams, window: TimeWindow, seed: int,
                          stream: int = 0) -> tuple[EventPath, EventPath, float]:
    """Periodic drive ``Y`` and responding train ``X``.

    Returns ``(x, y, phase)``. ``Y`` fires at ``phase + n*delta_y`` on
    ``[tau, t_end]``. In each response window ``[t_y, t_y + delta_x)`` the
    train ``X`` fires at most once. Thinning against the bound
    ``c/(delta_x(1-c))`` is used for ``c < 1``. For ``c == 1`` the spike
    position is drawn directly from the uniform law.
    """
    rng = make_rng(seed, stream)
    dy, dx, c = params.delta_y, params.delta_x, params.c
    phase = params.phase_dist.sample(rng, dy)
    n_lo = math.ceil((window.tau - phase) / dy)
    n_hi = math.floor((window.t_end - phase) / dy)
    starts = phase + dy * np.arange(n_lo, n_hi + 1)
    y = EventPath(window, starts[(starts >= window.tau) & (starts <= window.t_end)])
    if c == 0 or starts.size == 0:
        return EventPath(window, np.empty(0)), y, phase
    if c >= 1.0:
        spikes = starts + rng.uniform(0.0, dx, size=starts.size)
    else:
        bound = params.bound
        counts = rng.poisson(bound * dx, size=starts.size)
        win = np.repeat(np.arange(starts.size), counts)
        u = rng.uniform(0.0, dx, size=win.size)
        order = np.lexsort((u, win))
        win, u = win[order], u[order]
        accept = rng.uniform(size=u.size) * bound < event_driven_intensity(u, c, dx)
        first_w, first_idx = np.unique(win[accept], return_index=True)
        spikes = starts[first_w] + u[accept][first_idx]
    spikes = np.sort(spikes[(spikes >= window.tau) & (spikes <= window.t_end)])
    return EventPath(window, spikes), y, phase


def simulate_coupled_spiking(params: CoupledSpikingParams, window: TimeWindow, seed: int,
                             stream: int = 0, history: float = math.inf) -> tuple[EventPath, EventPath]:
    """Poisson drive ``Y`` and target ``X`` thinned at the ``t^y``-dependent rate.

    Parameters
    ----------
    history : float
        Length of the stretch before ``t0`` on which the drive is silent.
        Earlier drive spikes are drawn from the Poisson law; only those
        within ``t_cut`` of ``t0`` can matter. The default (infinite) means
        the drive never fired before ``t0``, and so does any value of at
        least ``t_cut``. Pre-window drive spikes are returned in ``y``,
        whose window then starts its history at ``t0 - t_cut``.
    """
    if not history >= 0:
        raise ParameterError("history must be nonnegative")
    rng = make_rng(seed, stream)
    y_ev = _poisson_times(rng, params.lambda_y, window.t0, window.t_end)
    bound = params.bound
    cand = _poisson_times(rng, bound, window.t0, window.t_end)
    u = rng.uniform(size=cand.size)
    y_window = window
    if history < params.t_cut:
        # Drawn last so that the default path uses exactly the same numbers.
        pre = _poisson_times(rng, params.lambda_y, window.t0 - params.t_cut, window.t0 - history)
        pre = pre[pre < window.t0 - history]
        y_ev = np.concatenate([pre, y_ev])
        y_window = replace(window, tau=min(window.tau, window.t0 - params.t_cut))
    ty = time_since(y_ev, cand)
    accept = u * bound < coupled_intensity(ty, params)
    return EventPath(window, cand[accept]), EventPath(y_window, y_ev)


def time_since(events: np.ndarray, t: np.ndarray, inclusive: bool = True) -> np.ndarray:
    """Vectorised time since the last event at or before each query (inf if none).

    With ``inclusive=False`` an event exactly at the query time is ignored,
    which gives the left-limit convention.
    """
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(events, t, side="right" if inclusive else "left")
    prev = np.where(idx > 0, events[np.maximum(idx - 1, 0)] if events.size else 0.0, -np.inf)
    return t - prev

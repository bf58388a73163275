"""Intensity traces of the three point-process models along given paths.

Each builder returns an :class:`~ctinfo.paths.IntensityTrace` on the
observation window ``[t0, t_end]`` with explicit jump nodes, ready for the
pathwise functionals in :mod:`ctinfo.infomeasures`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .exceptions import ParameterError
from .paths import EventPath, IntensityTrace, TimeWindow
from .simulate import (CoupledSpikingParams, EventDrivenParams, RefractoryParams,
                       coupled_intensity, time_since)


def _pairs(times: np.ndarray, left: np.ndarray, right: np.ndarray):
    return np.repeat(times, 2), np.column_stack([left, right]).ravel()


def _assemble(window: TimeWindow, times: np.ndarray, values: np.ndarray) -> IntensityTrace:
    order = np.argsort(times, kind="stable")
    return IntensityTrace(times[order], values[order])


# ---------------------------------------------------------------------------
# Refractory Poisson process
# ---------------------------------------------------------------------------


def refractory_intensity_trace(x: EventPath, params: RefractoryParams) -> IntensityTrace:
    """Full-history intensity: ``mu`` once ``delta_x`` has passed since the last event."""
    w = x.window
    mu, dx = params.mu, params.delta_x
    ev = x.events
    if dx == 0 or ev.size == 0:
        return IntensityTrace.constant(mu, w)
    ends = ev + dx
    # A refractory period can end after the next event only if gaps < dx,
    # which the model forbids; guard anyway so the trace stays well formed.
    if np.any(ev[1:] < ends[:-1]):
        raise ParameterError("path violates the refractory constraint")
    starts_in = ev[(ev >= w.t0) & (ev <= w.t_end)]
    ends_in = ends[(ends >= w.t0) & (ends <= w.t_end)]
    t_list = [np.array([w.t0, w.t_end])]
    v_list = [np.array([_refractory_value(w.t0, ev, mu, dx, side="right"),
                        _refractory_value(w.t_end, ev, mu, dx, side="left")])]
    keep_s = (starts_in > w.t0) & (starts_in < w.t_end)
    keep_e = (ends_in > w.t0) & (ends_in < w.t_end)
    ts, vs = _pairs(starts_in[keep_s], np.full(keep_s.sum(), mu), np.zeros(keep_s.sum()))
    te, ve = _pairs(ends_in[keep_e], np.zeros(keep_e.sum()), np.full(keep_e.sum(), mu))
    t_list += [ts, te]
    v_list += [vs, ve]
    return _assemble(w, np.concatenate(t_list), np.concatenate(v_list))


def _refractory_value(t: float, ev: np.ndarray, mu: float, dx: float, side: str) -> float:
    since = time_since(ev, np.array([t]), inclusive=(side == "right"))[0]
    return mu if since >= dx else 0.0


def refractory_truncated_intensity(since: np.ndarray, params: RefractoryParams, s: float) -> np.ndarray:
    """Intensity given only the history window of length ``s``.

    ``since`` is the time since the last event. If an event lies inside the
    window the full-history value applies. Otherwise the stationary age law
    conditioned on ``age > s`` gives ``mu / (1 + mu (delta_x - s))`` for
    ``s < delta_x``.
    """
    mu, dx = params.mu, params.delta_x
    since = np.asarray(since, dtype=float)
    full = np.where(since >= dx, mu, 0.0)
    if s >= dx:
        return full
    quiet = mu / (1.0 + mu * (dx - s))
    return np.where(since <= s, full, quiet)


def refractory_truncated_trace(x: EventPath, params: RefractoryParams, s: float,
                               resolution: int = 4) -> IntensityTrace:
    """Trace of :func:`refractory_truncated_intensity` along ``x``.

    The value is piecewise constant and changes only at event times, at
    ``t_i + s`` and at ``t_i + delta_x``. ``resolution`` is unused for this
    model and kept for interface symmetry.
    """
    w = x.window
    ev = x.events
    marks = np.concatenate([ev, ev + s, ev + params.delta_x])
    marks = np.unique(marks[(marks > w.t0) & (marks < w.t_end)])
    grid = np.concatenate([[w.t0], marks, [w.t_end]])
    left = refractory_truncated_intensity(time_since(ev, grid, inclusive=False), params, s)
    right = refractory_truncated_intensity(time_since(ev, grid, inclusive=True), params, s)
    # No history before t0 is treated as an arbitrarily long quiet period.
    left[0] = right[0]
    right[-1] = left[-1]
    t = np.repeat(grid, 2)
    v = np.column_stack([left, right]).ravel()
    return IntensityTrace(t[1:-1], v[1:-1])


# ---------------------------------------------------------------------------
# Event-driven process
# ---------------------------------------------------------------------------


def _window_starts(phase: float, delta_y: float, a: float, b: float) -> np.ndarray:
    n_lo = math.ceil((a - phase) / delta_y) - 1
    n_hi = math.floor((b - phase) / delta_y)
    return phase + delta_y * np.arange(n_lo, n_hi + 1)


def event_driven_traces(x: EventPath, params: EventDrivenParams, phase: float,
                        nodes_per_window: int = 64) -> tuple[IntensityTrace, IntensityTrace]:
    """Full-history and Markov intensities for a known drive phase.

    Returns
    -------
    lambda_full : IntensityTrace
        ``c / (delta_x - c (t - t_y))`` inside a window that has not spiked
        yet, and zero otherwise.
    lambda_markov : IntensityTrace
        ``c / delta_x`` inside every window and zero outside. This is the
        history-free rate when the phase is known.
    """
    w = x.window
    c, dx, dy = params.c, params.delta_x, params.delta_y
    starts = _window_starts(phase, dy, w.t0, w.t_end)
    ev = x.events
    u = np.linspace(0.0, dx, nodes_per_window + 1)[:-1]
    hazard = c / (dx - c * u)
    end_val = c / (dx * (1.0 - c)) if c < 1 else hazard[-1]
    t_full, v_full = [], []
    for s0 in starts:
        k = np.searchsorted(ev, s0, side="left")
        sp = ev[k] if k < ev.size and ev[k] < s0 + dx else None
        if sp is None:
            tt = np.concatenate([[s0], s0 + u, [s0 + dx, s0 + dx]])
            vv = np.concatenate([[0.0], hazard, [end_val, 0.0]])
        else:
            j = np.searchsorted(u, sp - s0, side="left")
            tt = np.concatenate([[s0], s0 + u[:j], [sp, sp, s0 + dx]])
            vv = np.concatenate([[0.0], hazard[:j], [c / (dx - c * (sp - s0)), 0.0, 0.0]])
            if j == 0:
                # Spike exactly at the window start: keep at most two nodes there.
                tt, vv = np.array([s0, s0, s0 + dx]), np.array([0.0, 0.0, 0.0])
        t_full.append(tt)
        v_full.append(vv)
    if starts.size:
        lam_full = _clip_trace(np.concatenate(t_full), np.concatenate(v_full), w)
        t_mk = np.column_stack([starts, starts, starts + dx, starts + dx]).ravel()
        v_mk = np.tile([0.0, c / dx, c / dx, 0.0], starts.size)
        lam_markov = _clip_trace(t_mk, v_mk, w)
    else:
        lam_full = lam_markov = IntensityTrace.constant(0.0, w)
    return lam_full, lam_markov


def _clip_trace(t: np.ndarray, v: np.ndarray, w: TimeWindow) -> IntensityTrace:
    """Restrict a piecewise trace (zero where absent) to ``[t0, t_end]``."""
    if t.size == 0:
        return IntensityTrace.constant(0.0, w)
    base = IntensityTrace(np.concatenate([[min(t[0], w.t0) - 1.0], t, [max(t[-1], w.t_end) + 1.0]]),
                          np.concatenate([[0.0], v, [0.0]]))
    inner = (t > w.t0) & (t < w.t_end)
    tt = np.concatenate([[w.t0], t[inner], [w.t_end]])
    vv = np.concatenate([[base.right_limit(w.t0)], v[inner], [base.left_limit(w.t_end)]])
    return IntensityTrace(tt, vv)


def event_driven_marginal_markov(params: EventDrivenParams, window: TimeWindow,
                                 n_cells: int = 2000) -> IntensityTrace:
    """History-free rate when only the phase distribution is known.

    ``lambda0(t) = (c / delta_x) * P(phase in [t - delta_x, t] mod delta_y)``.
    This is constant ``c / delta_y`` for a uniform phase.
    """
    c, dx, dy = params.c, params.delta_x, params.delta_y
    pd = params.phase_dist
    if pd.kind == "uniform":
        return IntensityTrace.constant(c / dy, window)
    p = pd.cell_masses(n_cells, dy)
    edges = np.linspace(0.0, dy, n_cells + 1)
    cdf = np.concatenate([[0.0], np.cumsum(p)])

    def F(t):
        t = np.asarray(t, dtype=float)
        k = np.floor(t / dy)
        return k + np.interp(t - k * dy, edges, cdf)

    if pd.kind == "delta":
        starts = _window_starts(pd.location % dy, dy, window.t0, window.t_end)
        t = np.repeat(np.concatenate([starts, starts + dx]), 2)
        v = np.concatenate([np.tile([0.0, c / dx], starts.size), np.tile([c / dx, 0.0], starts.size)])
        order = np.lexsort((np.arange(t.size), t))
        return _clip_trace(t[order], v[order], window)
    grid = np.arange(window.t0, window.t_end, dy / n_cells)
    grid = np.concatenate([grid, [window.t_end]])
    vals = (c / dx) * (F(grid) - F(grid - dx))
    return IntensityTrace(grid, np.maximum(vals, 0.0))


# ---------------------------------------------------------------------------
# Coupled-spiking process
# ---------------------------------------------------------------------------


def coupled_conditional_trace(x: EventPath, y: EventPath, params: CoupledSpikingParams,
                              grid_step: float = 1e-3) -> IntensityTrace:
    """Intensity of ``X`` given both histories; jumps down to the base rate at ``Y`` spikes."""
    w = x.window
    n = int(math.ceil(w.duration / grid_step - 1e-9))
    grid = w.t0 + (w.t_end - w.t0) * np.arange(n + 1) / n
    yev = y.events
    y_in = yev[(yev > w.t0) & (yev < w.t_end)]
    x_in = x.events[(x.events > w.t0) & (x.events < w.t_end)]
    nodes = np.setdiff1d(np.union1d(grid, x_in), y_in)
    vals = coupled_intensity(time_since(yev, nodes, inclusive=True), params)
    left = coupled_intensity(time_since(yev, y_in, inclusive=False), params)
    right = np.full(y_in.size, params.lambda_base)
    t = np.concatenate([nodes, y_in, y_in])
    v = np.concatenate([vals, left, right])
    rank = np.concatenate([np.zeros(nodes.size), np.zeros(y_in.size), np.ones(y_in.size)])
    order = np.lexsort((rank, t))
    return IntensityTrace(t[order], v[order])


def coupled_markov_rate(params: CoupledSpikingParams) -> float:
    """Stationary history-free rate: the intensity averaged over ``t^y ~ Exp(lambda_y)``."""
    return float(coupled_markov_curve(params, np.array([np.inf]))[0])


def coupled_markov_curve(params: CoupledSpikingParams, elapsed: np.ndarray) -> np.ndarray:
    """History-free rate at ``elapsed`` time after a start with no drive spike.

    ``lambda0(e) = lambda_base + int_0^min(e, t_cut) lambda_y exp(-lambda_y s) (lambda(s) - lambda_base) ds``.
    The process is exactly stationary once ``e >= t_cut``.
    """
    ly, lb = params.lambda_y, params.lambda_base

    def g(s):
        return ly * math.exp(-ly * s) * (float(coupled_intensity(s, params)) - lb)

    e = np.minimum(np.asarray(elapsed, dtype=float), params.t_cut)
    brk = [0.5 * params.t_cut]
    grid = np.unique(np.concatenate([[0.0], np.sort(e.ravel())]))
    cum = np.zeros(grid.size)
    for i in range(1, grid.size):
        pts = [b for b in brk if grid[i - 1] < b < grid[i]]
        cum[i] = cum[i - 1] + quad(g, grid[i - 1], grid[i], points=pts or None,
                                   epsabs=1e-13, epsrel=1e-12, limit=200)[0]
    return lb + np.interp(e, grid, cum)


def coupled_markov_trace(params: CoupledSpikingParams, window: TimeWindow,
                         grid_step: float = 1e-3, stationary: bool = False) -> IntensityTrace:
    """History-free rate along a window that starts with no drive spike."""
    if stationary:
        return IntensityTrace.constant(coupled_markov_rate(params), window)
    t_ramp = min(window.t_end, window.t0 + params.t_cut)
    n = max(int(math.ceil((t_ramp - window.t0) / grid_step)), 1)
    e = np.linspace(0.0, t_ramp - window.t0, n + 1)
    vals = coupled_markov_curve_fast(params, e)
    t = window.t0 + e
    if t_ramp < window.t_end:
        t = np.concatenate([t, [window.t_end]])
        vals = np.concatenate([vals, [vals[-1]]])
    return IntensityTrace(t, vals)


def coupled_markov_curve_fast(params: CoupledSpikingParams, elapsed: np.ndarray) -> np.ndarray:
    """Same as :func:`coupled_markov_curve`, by fine trapezoid cumulation (for dense grids)."""
    ly, lb, tc = params.lambda_y, params.lambda_base, params.t_cut
    n = 200_000
    s = np.linspace(0.0, tc, n + 1)
    g = ly * np.exp(-ly * s) * (coupled_intensity(s, params) - lb)
    from scipy.integrate import cumulative_simpson

    cum = cumulative_simpson(g, x=s, initial=0.0)
    return lb + np.interp(np.minimum(elapsed, tc), s, cum)

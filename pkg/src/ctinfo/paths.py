"""Path and trace data types shared by the simulators and estimators.

Piecewise traces are stored as node arrays with nondecreasing times. A time
that appears twice marks a jump: the first node holds the left limit and the
second node holds the right limit. Between nodes values are linear, so the
trapezoid rule integrates them exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import DomainError, ValidationError

INFINITE = float("inf")
"""Sentinel returned when no event precedes a query time."""

_TIME_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeWindow:
    """Observation window ``[t0, t_end]`` with history origin ``tau``."""

    t0: float
    t_end: float
    tau: float | None = None

    def __post_init__(self) -> None:
        if self.tau is None:
            object.__setattr__(self, "tau", float(self.t0))
        vals = (self.tau, self.t0, self.t_end)
        if not all(np.isfinite(v) for v in vals):
            raise ValidationError("window bounds must be finite")
        if not (self.tau <= self.t0 < self.t_end):
            raise ValidationError(
                f"window requires tau <= t0 < t_end, got {self.tau}, {self.t0}, {self.t_end}"
            )
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "t_end", float(self.t_end))
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def duration(self) -> float:
        return self.t_end - self.t0

    def contains(self, t: float) -> bool:
        return self.tau <= t <= self.t_end


@dataclass(frozen=True)
class EventPath:
    """A point-process realisation: strictly increasing event times in a window."""

    window: TimeWindow
    events: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self) -> None:
        ev = np.asarray(self.events, dtype=float).ravel()
        if ev.size:
            if not np.all(np.isfinite(ev)):
                raise ValidationError("event times must be finite")
            if np.any(np.diff(ev) <= 0):
                raise ValidationError("event times must be strictly increasing")
            if ev[0] < self.window.tau or ev[-1] > self.window.t_end:
                raise ValidationError("event times must lie inside [tau, t_end]")
        object.__setattr__(self, "events", _frozen(ev))

    def __len__(self) -> int:
        return int(self.events.size)

    def in_observation(self) -> np.ndarray:
        """Events in ``[t0, t_end]`` (excluding pre-window history)."""
        ev = self.events
        return ev[ev >= self.window.t0]

    @property
    def rate(self) -> float:
        """Empirical event rate over ``[t0, t_end]``."""
        return len(self.in_observation()) / self.window.duration


@dataclass(frozen=True)
class StatePath:
    """A piecewise-constant jump path with labelled states."""

    window: TimeWindow
    initial_state: Hashable
    transitions: tuple = ()

    def __post_init__(self) -> None:
        trans = tuple((float(t), s) for t, s in self.transitions)
        prev_t, prev_s = -np.inf, self.initial_state
        for t, s in trans:
            if not (self.window.tau <= t <= self.window.t_end):
                raise ValidationError("transition time outside window")
            if t <= prev_t:
                raise ValidationError("transition times must be strictly increasing")
            if s == prev_s:
                raise ValidationError("consecutive states must differ")
            prev_t, prev_s = t, s
        object.__setattr__(self, "transitions", trans)

    def state_at(self, t: float, left: bool = False) -> Hashable:
        """State at ``t``; with ``left=True`` the left limit ``x_t^-``."""
        if not self.window.contains(t):
            raise DomainError(f"t={t} outside window")
        state = self.initial_state
        for tt, s in self.transitions:
            if tt < t or (tt == t and not left):
                state = s
            else:
                break
        return state


@dataclass(frozen=True)
class SamplePath:
    """Two real-valued coordinates sampled on a uniform grid."""

    window: TimeWindow
    dt: float
    values_x: np.ndarray
    values_y: np.ndarray

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        x = np.asarray(self.values_x, dtype=float).ravel()
        y = np.asarray(self.values_y, dtype=float).ravel()
        if x.size != y.size:
            raise ValidationError("x and y sample arrays differ in length")
        n_expected = int(round(self.window.duration / self.dt)) + 1
        if x.size != n_expected:
            raise ValidationError(
                f"expected {n_expected} samples for window/dt, got {x.size}"
            )
        object.__setattr__(self, "values_x", _frozen(x))
        object.__setattr__(self, "values_y", _frozen(y))

    @property
    def times(self) -> np.ndarray:
        return self.window.t0 + self.dt * np.arange(self.values_x.size)


class IntensityTrace:
    """Piecewise-linear intensity with explicit jump nodes.

    Parameters
    ----------
    times : array_like
        Nondecreasing node times. A time may appear at most twice; a repeated
        time carries the left limit first and the right limit second.
    values : array_like
        Intensity at each node (1/s), nonnegative.
    """

    def __init__(self, times: Sequence[float], values: Sequence[float]):
        t = np.asarray(times, dtype=float).ravel()
        v = np.asarray(values, dtype=float).ravel()
        if t.size != v.size or t.size < 2:
            raise ValidationError("trace needs at least two nodes of matching length")
        if np.any(np.diff(t) < 0):
            raise ValidationError("trace times must be nondecreasing")
        if t.size > 2 and np.any((t[2:] == t[:-2])):
            raise ValidationError("a trace time may appear at most twice")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValidationError("trace must be finite")
        if np.any(v < 0):
            raise ValidationError("intensities must be nonnegative")
        self.times = _frozen(t)
        self.values = _frozen(v)

    @classmethod
    def constant(cls, value: float, window: TimeWindow) -> "IntensityTrace":
        return cls([window.t0, window.t_end], [value, value])

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_stop(self) -> float:
        return float(self.times[-1])

    def __len__(self) -> int:
        return int(self.times.size)

    def _check(self, t: np.ndarray) -> None:
        if np.any(t < self.times[0] - _TIME_TOL) or np.any(t > self.times[-1] + _TIME_TOL):
            raise DomainError("query time outside the trace support")

    def _interp(self, t: np.ndarray, idx_hi: np.ndarray) -> np.ndarray:
        n = self.times.size
        hi = np.clip(idx_hi, 1, n - 1)
        lo = hi - 1
        t0, t1 = self.times[lo], self.times[hi]
        v0, v1 = self.values[lo], self.values[hi]
        span = t1 - t0
        w = np.divide(t - t0, span, out=np.zeros_like(t), where=span > 0)
        return v0 + np.clip(w, 0.0, 1.0) * (v1 - v0)

    def left_limit(self, t) -> np.ndarray | float:
        """Value just before ``t`` (the pre-event convention)."""
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        self._check(tq)
        idx = np.searchsorted(self.times, tq, side="left")
        out = self._interp(tq, idx)
        exact = (idx < self.times.size) & (self.times[np.minimum(idx, self.times.size - 1)] == tq)
        out[exact] = self.values[idx[exact]]
        return out if np.ndim(t) else float(out[0])

    def right_limit(self, t) -> np.ndarray | float:
        """Value just after ``t``."""
        tq = np.atleast_1d(np.asarray(t, dtype=float))
        self._check(tq)
        idx = np.searchsorted(self.times, tq, side="right")
        out = self._interp(tq, idx)
        exact = (idx > 0) & (self.times[np.maximum(idx - 1, 0)] == tq)
        out[exact] = self.values[idx[exact] - 1]
        return out if np.ndim(t) else float(out[0])

    __call__ = right_limit

    def jump_times(self) -> np.ndarray:
        d = np.flatnonzero(np.diff(self.times) == 0)
        return self.times[d[self.values[d] != self.values[d + 1]]]

    def integral(self, a: float | None = None, b: float | None = None) -> float:
        """Integral over ``[a, b]`` (defaults to the full support)."""
        a = self.t_start if a is None else float(a)
        b = self.t_stop if b is None else float(b)
        if b < a:
            raise DomainError("integration bounds reversed")
        return float(_segment_integral(self, np.array([a, b]))[0])

    def time_average(self, a: float | None = None, b: float | None = None) -> float:
        a = self.t_start if a is None else float(a)
        b = self.t_stop if b is None else float(b)
        return self.integral(a, b) / (b - a)


def _segment_integral(trace: IntensityTrace, cuts: np.ndarray) -> np.ndarray:
    """Integrals of ``trace`` over consecutive intervals between ``cuts``."""
    t, v = trace.times, trace.values
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])

    def cum_at(x: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(t, x, side="right"), 1, t.size - 1)
        # Value just before x on the segment containing x; jumps at x do not
        # contribute area, so either limit gives the same integral.
        lo = idx - 1
        base = cum[lo]
        vx = trace.left_limit(x)
        return base + 0.5 * (v[lo] + vx) * (x - t[lo])

    trace._check(cuts)
    c = cum_at(np.asarray(cuts, dtype=float))
    return np.diff(c)


def align_traces(traces: Sequence[IntensityTrace], force_pairs: np.ndarray | None = None):
    """Place several traces on a common node grid.

    Parameters
    ----------
    traces : sequence of IntensityTrace
        Traces over the same support.
    force_pairs : array_like, optional
        Times that must appear as a left/right node pair even where every
        trace is continuous (used for event times, so jump terms have a node).

    Returns
    -------
    times : ndarray
        Common node times, with duplicates at jumps and forced pairs.
    values : list of ndarray
        Each trace evaluated on ``times`` with the left/right convention.
    """
    grid = np.unique(np.concatenate([tr.times for tr in traces]))
    forced = np.zeros(grid.size, dtype=bool)
    if force_pairs is not None and len(force_pairs):
        fp = np.asarray(force_pairs, dtype=float)
        for tr in traces:
            tr._check(fp)
        grid = np.union1d(grid, fp)
        forced = np.isin(grid, fp)
    lefts = [np.asarray(tr.left_limit(grid)) for tr in traces]
    rights = [np.asarray(tr.right_limit(grid)) for tr in traces]
    pair = forced.copy()
    for L, R in zip(lefts, rights):
        pair |= L != R
    reps = np.where(pair, 2, 1)
    times = np.repeat(grid, reps)
    # Position of the first node for every grid point.
    first = np.concatenate([[0], np.cumsum(reps)[:-1]])
    out = []
    for L, R in zip(lefts, rights):
        v = np.repeat(L, reps)
        v[first[pair] + 1] = R[pair]
        out.append(v)
    return times, out


@dataclass(frozen=True)
class InfoTrace:
    """Cumulative pathwise information with separated jump and continuous parts.

    Node times follow the :class:`IntensityTrace` convention. Jump
    contributions are applied at the last node that carries their time.
    """

    times: np.ndarray
    cumulative_M: np.ndarray
    cumulative_T: np.ndarray
    jump_times: np.ndarray
    jump_M: np.ndarray
    jump_T: np.ndarray
    rate_M: np.ndarray
    rate_T: np.ndarray

    def __post_init__(self) -> None:
        for name in ("times", "cumulative_M", "cumulative_T", "rate_M", "rate_T"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("jump_times", "jump_M", "jump_T"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.times.size
        if any(getattr(self, k).size != n for k in ("cumulative_M", "cumulative_T", "rate_M", "rate_T")):
            raise ValidationError("InfoTrace arrays must share the node count")
        m = self.jump_times.size
        if self.jump_M.size != m or self.jump_T.size != m:
            raise ValidationError("jump arrays must share a length")
        if n and np.any(np.diff(self.times) < 0):
            raise ValidationError("InfoTrace times must be nondecreasing")

    @property
    def jump_contribs(self) -> list[tuple[float, float, float]]:
        return list(zip(self.jump_times.tolist(), self.jump_M.tolist(), self.jump_T.tolist()))

    @property
    def total_M(self) -> float:
        return float(self.cumulative_M[-1])

    @property
    def total_T(self) -> float:
        return float(self.cumulative_T[-1])

    def value_at(self, t: float, which: str = "M") -> float:
        """Cumulative value just after ``t``."""
        cum = self.cumulative_M if which == "M" else self.cumulative_T
        rate = self.rate_M if which == "M" else self.rate_T
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        if i < 0 or t > self.times[-1]:
            raise DomainError("t outside InfoTrace support")
        if i == self.times.size - 1:
            return float(cum[i])
        dt = t - self.times[i]
        span = self.times[i + 1] - self.times[i]
        r_t = rate[i] + (rate[i + 1] - rate[i]) * dt / span
        return float(cum[i] + 0.5 * (rate[i] + r_t) * dt)


def reconstruct_cumulative(times: np.ndarray, rate: np.ndarray,
                           jump_times: np.ndarray, jumps: np.ndarray) -> np.ndarray:
    """Cumulative sum of trapezoid-integrated ``rate`` plus jumps."""
    cum = cumulative_trapezoid(rate, times, initial=0.0) if times.size else np.zeros(0)
    if jump_times.size:
        k = np.searchsorted(times, jump_times, side="right") - 1
        if np.any(k < 0):
            raise ValidationError("jump time precedes the trace grid")
        add = np.zeros(times.size + 1)
        np.add.at(add, k, jumps)
        cum = cum + np.cumsum(add[:-1])
    return cum


def time_since_last_event(path: EventPath, t: float) -> float:
    """Time elapsed since the most recent event at or before ``t``.

    Returns :data:`INFINITE` if no event precedes ``t``.
    """
    if not path.window.contains(t):
        raise DomainError(f"t={t} outside [{path.window.tau}, {path.window.t_end}]")
    i = int(np.searchsorted(path.events, t, side="right"))
    if i == 0:
        return INFINITE
    return float(t - path.events[i - 1])


def verify_trace_consistency(trace: InfoTrace, tol: float = 1e-6) -> bool:
    """Check that stored cumulatives equal jumps plus integrated rates.

    The comparison is relative: ``|stored - rebuilt| <= tol * (1 + |stored|)``.
    """
    if not isinstance(trace, InfoTrace):
        raise ValidationError("expected an InfoTrace")
    if not (np.all(np.isfinite(trace.cumulative_M)) and np.all(np.isfinite(trace.cumulative_T))):
        raise ValidationError("cumulative values must be finite")
    if trace.times.size == 0:
        return True
    for cum, rate, jumps in ((trace.cumulative_M, trace.rate_M, trace.jump_M),
                             (trace.cumulative_T, trace.rate_T, trace.jump_T)):
        rebuilt = reconstruct_cumulative(trace.times, rate, trace.jump_times, jumps)
        if np.any(np.abs(cum - rebuilt) > tol * (1.0 + np.abs(cum))):
            return False
    return True

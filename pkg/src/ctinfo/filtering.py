"""Marginal intensity of the coupled-spiking target by filtering over ``t^y``.

The unobserved drive ``Y`` enters the target intensity only through the time
``t^y`` since its last spike, so the posterior of ``t^y`` given the target's
own history is a sufficient statistic. The filter carries that posterior as
probability masses on cells of width ``h`` centred at ``(k + 1/2) h``, plus a
lumped mass for ``t^y`` beyond the last cell (including "no drive spike yet"),
where the intensity equals the base rate.

One step of length ``h`` does the following:

* moves every cell one slot to the right. The mass is multiplied by the exact
  survival factor ``exp(-(Lambda(s + h) - Lambda(s)))`` along the path;
* moves the fraction ``1 - exp(-lambda_y h)`` of the mass to the first cell,
  because drive renewals reset ``t^y``;
* renormalises.

At an observed target spike inside a step, the masses are advanced to the
spike time. They are then multiplied by the intensity there (Bayes' rule).
The intensity just before the update is the left limit of the marginal
intensity, and the one just after is its right limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numba
import numpy as np

from .exceptions import ImpossibleEventError, NumericalInstabilityError, ParameterError
from .paths import EventPath, IntensityTrace
from .simulate import CoupledSpikingParams, coupled_cumulative, coupled_intensity


@dataclass(frozen=True)
class FilterState:
    """Posterior over ``t^y`` on cells ``[k h, (k+1) h)``.

    Attributes
    ----------
    h : float
        Cell width (s).
    density : ndarray
        Posterior density (1/s) at cell centres; cell mass is ``density * h``.
    mass_beyond : float
        Probability that ``t^y`` exceeds ``s_max = len(density) * h``.
    """

    h: float
    density: np.ndarray
    mass_beyond: float

    @property
    def grid(self) -> np.ndarray:
        return (np.arange(self.density.size) + 0.5) * self.h

    @property
    def s_max(self) -> float:
        return self.density.size * self.h

    @property
    def total_mass(self) -> float:
        return float(self.density.sum() * self.h + self.mass_beyond)

    @classmethod
    def stationary(cls, lambda_y: float, h: float, s_max: float) -> "FilterState":
        """Exponential law of the time since the last Poisson(``lambda_y``) event."""
        n = int(math.ceil(s_max / h - 1e-9))
        edges = np.arange(n + 1) * h
        cdf = -np.expm1(-lambda_y * edges)
        return cls(h, np.diff(cdf) / h, float(math.exp(-lambda_y * n * h)))

    @classmethod
    def empty_history(cls, h: float, s_max: float) -> "FilterState":
        """No drive spike observed: all mass in the flat region."""
        n = int(math.ceil(s_max / h - 1e-9))
        return cls(h, np.zeros(n), 1.0)

    @classmethod
    def quiet_history(cls, lambda_y: float, h: float, s_max: float, quiet: float) -> "FilterState":
        """Drive known to be silent for the last ``quiet`` seconds: ``quiet + Exp(lambda_y)``."""
        if quiet < 0:
            raise ParameterError("quiet history length must be nonnegative")
        n = int(math.ceil(s_max / h - 1e-9))
        edges = np.arange(n + 1) * h
        cdf = -np.expm1(-lambda_y * np.clip(edges - quiet, 0.0, None))
        return cls(h, np.diff(cdf) / h, float(1.0 - cdf[-1]))

    @classmethod
    def point_mass(cls, s0: float, h: float, s_max: float) -> "FilterState":
        n = int(math.ceil(s_max / h - 1e-9))
        d = np.zeros(n)
        d[min(int(s0 / h), n - 1)] = 1.0 / h
        return cls(h, d, 0.0)


def _check_state(density: np.ndarray, beyond: float) -> None:
    if np.any(density < -1e-15) or beyond < -1e-15 or not np.all(np.isfinite(density)):
        raise NumericalInstabilityError("filter produced negative or non-finite mass")


def filter_predict(state: FilterState, dt_step: float, lambda_y: float,
                   intensity_given_ty: Callable[[np.ndarray], np.ndarray],
                   cumulative_given_ty: Callable[[np.ndarray], np.ndarray] | None = None,
                   ) -> tuple[FilterState, float]:
    """Advance the posterior by one cell width with no target spike.

    Parameters
    ----------
    state : FilterState
        Posterior at the start of the step.
    dt_step : float
        Step length; must equal ``state.h`` (cells move by whole slots).
    lambda_y : float
        Drive rate.
    intensity_given_ty : callable
        Target intensity as a function of ``t^y``; ``np.inf`` addresses the
        lumped tail.
    cumulative_given_ty : callable, optional
        Antiderivative of the intensity. When given, survival factors are
        exact; otherwise a midpoint rule is used.

    Returns
    -------
    state : FilterState
        Posterior at the end of the step.
    lambda_bar : float
        Marginal intensity at the start of the step (before reweighting).
    """
    h = state.h
    if not math.isclose(dt_step, h, rel_tol=1e-9):
        raise ParameterError("dt_step must equal the filter cell width")
    s = state.grid
    mass = state.density * h
    lam_tail = float(intensity_given_ty(np.array([np.inf]))[0])
    lam_bar = float(mass @ intensity_given_ty(s) + state.mass_beyond * lam_tail) / state.total_mass
    if cumulative_given_ty is not None:
        surv = np.exp(-(cumulative_given_ty(s + h) - cumulative_given_ty(s)))
    else:
        surv = np.exp(-intensity_given_ty(s + 0.5 * h) * h)
    moved = mass * surv
    new = np.empty_like(mass)
    new[1:] = moved[:-1]
    beyond = state.mass_beyond * math.exp(-lam_tail * h) + moved[-1]
    survived = new[1:].sum() + beyond
    r = -math.expm1(-lambda_y * h)
    new[1:] *= 1.0 - r
    beyond *= 1.0 - r
    new[0] = r * survived
    total = new.sum() + beyond
    if total <= 0:
        raise NumericalInstabilityError("posterior mass vanished")
    new /= total
    beyond /= total
    _check_state(new, beyond)
    return FilterState(h, new / h, float(beyond)), lam_bar


def filter_update_at_x_spike(state: FilterState,
                             intensity_given_ty: Callable[[np.ndarray], np.ndarray]) -> FilterState:
    """Condition the posterior on a target spike at the current time."""
    h = state.h
    mass = state.density * h
    lam = intensity_given_ty(state.grid)
    lam_tail = float(intensity_given_ty(np.array([np.inf]))[0])
    new = mass * lam
    beyond = state.mass_beyond * lam_tail
    norm = new.sum() + beyond
    if not norm > 0:
        raise ImpossibleEventError("target spike has zero marginal intensity")
    new /= norm
    beyond /= norm
    _check_state(new, beyond)
    return FilterState(h, new / h, float(beyond))


# ---------------------------------------------------------------------------
# Compiled filter for the coupled-spiking model
# ---------------------------------------------------------------------------


@numba.njit(cache=True, inline="always")
def _lam(s, lb, m, two_var, c, floor, t_cut):
    if s > 0.0 and s <= t_cut:
        return lb + m * (math.exp(-((s - c) ** 2) / two_var) - floor)
    return lb


@numba.njit(cache=True, inline="always")
def _cum(s, lb, m, sigma, c, floor, t_cut):
    r2s = math.sqrt(2.0) * sigma
    sc = min(s, t_cut)
    bump = m * (sigma * math.sqrt(math.pi / 2.0) * (math.erf((sc - c) / r2s) + math.erf(c / r2s)) - floor * sc)
    return lb * s + bump


@numba.njit(cache=True, nogil=True)
def _run_filter(x, t0, h, n_steps, w0, tail0, lambda_y, lb, m, sigma, t_cut,
                record, int_start_step):
    n = w0.size
    c = 0.5 * t_cut
    two_var = 2.0 * sigma * sigma
    floor = math.exp(-(c * c) / two_var)
    pos = (np.arange(n) + 0.5) * h
    lam_node = np.empty(n)
    cum_node = np.empty(n + 1)
    for k in range(n):
        lam_node[k] = _lam(pos[k], lb, m, two_var, c, floor, t_cut)
        cum_node[k] = _cum(pos[k], lb, m, sigma, c, floor, t_cut)
    cum_node[n] = _cum(pos[n - 1] + h, lb, m, sigma, c, floor, t_cut)
    surv_full = np.empty(n)
    for k in range(n):
        surv_full[k] = math.exp(-(cum_node[k + 1] - cum_node[k]))
    surv_tail = math.exp(-lb * h)
    renew = -math.expm1(-lambda_y * h)

    w = w0.copy()
    tail = tail0
    cum_cur = np.empty(n)
    lam_tmp = np.empty(n)
    n_x = x.size
    pre = np.empty(n_x)
    post = np.empty(n_x)
    node_vals = np.empty(n_steps + 1 if record else 1)

    lam_now = tail * lb
    for k in range(n):
        lam_now += w[k] * lam_node[k]
    if record:
        node_vals[0] = lam_now
    integral = 0.0
    j = 0
    while j < n_x and x[j] < t0:
        j += 1
    for step in range(n_steps):
        t_n = t0 + step * h
        t_next = t0 + (step + 1) * h
        cur = 0.0
        spiked = False
        seg_int = 0.0
        while j < n_x and x[j] < t_next:
            d = x[j] - t_n
            if d < 0.0:
                d = 0.0
            if not spiked:
                for k in range(n):
                    cum_cur[k] = cum_node[k]
                spiked = True
            total = 0.0
            lam_pre = 0.0
            for k in range(n):
                cnew = _cum(pos[k] + d, lb, m, sigma, c, floor, t_cut)
                w[k] *= math.exp(-(cnew - cum_cur[k]))
                cum_cur[k] = cnew
                lam_tmp[k] = _lam(pos[k] + d, lb, m, two_var, c, floor, t_cut)
                total += w[k]
                lam_pre += w[k] * lam_tmp[k]
            tail *= math.exp(-lb * (d - cur))
            total += tail
            lam_pre = (lam_pre + tail * lb) / total
            seg_int += 0.5 * (lam_now + lam_pre) * (d - cur)
            # Bayes update, then normalise.
            norm = 0.0
            sq = 0.0
            for k in range(n):
                w[k] *= lam_tmp[k]
                norm += w[k]
                sq += w[k] * lam_tmp[k]
            tail *= lb
            norm += tail
            sq += tail * lb
            if not norm > 0.0:
                return -1.0, pre, post, node_vals, w, tail, j
            for k in range(n):
                w[k] /= norm
            tail /= norm
            lam_post = sq / norm
            pre[j] = lam_pre
            post[j] = lam_post
            lam_now = lam_post
            cur = d
            j += 1
        # Survive to the end of the step and shift by one cell.
        if spiked:
            last = w[n - 1] * math.exp(-(cum_node[n] - cum_cur[n - 1]))
            for k in range(n - 1, 0, -1):
                w[k] = w[k - 1] * math.exp(-(cum_node[k] - cum_cur[k - 1]))
            tail = tail * math.exp(-lb * (h - cur)) + last
        else:
            last = w[n - 1] * surv_full[n - 1]
            for k in range(n - 1, 0, -1):
                w[k] = w[k - 1] * surv_full[k - 1]
            tail = tail * surv_tail + last
        survived = tail
        for k in range(1, n):
            survived += w[k]
        # Renewal keeps the total at ``survived``; normalise it back to one.
        w[0] = renew
        scale = (1.0 - renew) / survived
        lam_next = w[0] * lam_node[0]
        for k in range(1, n):
            w[k] *= scale
            lam_next += w[k] * lam_node[k]
        tail *= scale
        lam_next += tail * lb
        seg_int += 0.5 * (lam_now + lam_next) * (h - cur)
        if step >= int_start_step:
            integral += seg_int
        lam_now = lam_next
        if record:
            node_vals[step + 1] = lam_now
    return integral, pre, post, node_vals, w, tail, j


@dataclass(frozen=True)
class FilterRun:
    """Result of filtering one target path.

    Attributes
    ----------
    node_times, node_values : ndarray
        Marginal intensity at the step boundaries (empty unless recorded).
    spike_times, pre_spike, post_spike : ndarray
        Left and right limits of the marginal intensity at target spikes.
    integral : float
        Integral of the marginal intensity over the averaging interval.
    averaging_interval : tuple of float
        Interval covered by ``integral``.
    h : float
        Effective step (divides the window exactly).
    """

    node_times: np.ndarray
    node_values: np.ndarray
    spike_times: np.ndarray
    pre_spike: np.ndarray
    post_spike: np.ndarray
    integral: float
    averaging_interval: tuple[float, float]
    h: float

    @property
    def mean_intensity(self) -> float:
        a, b = self.averaging_interval
        return self.integral / (b - a)

    def trace(self) -> IntensityTrace:
        """Marginal intensity as an :class:`IntensityTrace` with jumps at spikes."""
        if self.node_values.size == 0:
            raise ParameterError("run the filter with record=True to build a trace")
        keep = ~np.isin(self.node_times, self.spike_times)
        t = np.concatenate([self.node_times[keep], self.spike_times, self.spike_times])
        v = np.concatenate([self.node_values[keep], self.pre_spike, self.post_spike])
        rank = np.concatenate([np.zeros(keep.sum()), np.zeros(self.spike_times.size),
                               np.ones(self.spike_times.size)])
        order = np.lexsort((rank, t))
        return IntensityTrace(t[order], v[order])


def run_coupled_filter(x: EventPath, params: CoupledSpikingParams, grid_step: float = 1e-3,
                       initial: str | float = "empty", record: bool = True,
                       burn_in: float = 0.0) -> FilterRun:
    """Filter a target path over ``[t0, t_end]`` of its window.

    Parameters
    ----------
    x : EventPath
        Observed target spikes.
    params : CoupledSpikingParams
        Model for the unobserved drive and the coupling.
    grid_step : float
        Requested cell width; reduced slightly so it divides the window.
    initial : {'empty', 'stationary'} or float
        Drive history before ``t0``. ``'empty'`` means no drive spike before
        ``t0``, as in the simulator's default. ``'stationary'`` starts from
        the exponential law of a drive that has run forever. A number ``L``
        means the drive is known to be silent on ``[t0 - L, t0)`` and
        unobserved before that (the simulator's ``history`` argument).
    record : bool
        Keep node values so that :meth:`FilterRun.trace` can be built.
    burn_in : float
        Length of the initial stretch excluded from ``integral``.
    """
    if grid_step <= 0:
        raise ParameterError("grid_step must be positive")
    w = x.window
    n_steps = int(math.ceil(w.duration / grid_step - 1e-9))
    h = w.duration / n_steps
    s_max = params.t_cut
    if isinstance(initial, (int, float)) and not isinstance(initial, bool):
        st = FilterState.quiet_history(params.lambda_y, h, s_max, float(initial))
    elif initial == "stationary":
        st = FilterState.stationary(params.lambda_y, h, s_max)
    elif initial == "empty":
        st = FilterState.empty_history(h, s_max)
    else:
        raise ParameterError("initial must be 'empty', 'stationary' or a quiet-history length")
    events = x.in_observation()
    start_step = int(math.ceil(burn_in / h - 1e-9))
    if start_step >= n_steps:
        raise ParameterError("burn_in leaves nothing to average")
    integral, pre, post, nodes, _, _, _ = _run_filter(
        events, w.t0, h, n_steps, st.density * h, st.mass_beyond, params.lambda_y,
        params.lambda_base, params.m, params.sigma, params.t_cut, record, start_step)
    if integral < 0:
        raise ImpossibleEventError("target spike has zero marginal intensity")
    node_times = w.t0 + h * np.arange(n_steps + 1) if record else np.empty(0)
    return FilterRun(node_times, nodes if record else np.empty(0), events, pre, post,
                     float(integral), (w.t0 + start_step * h, w.t_end), h)


def marginal_intensity_trace(x: EventPath, y_unobserved_model: CoupledSpikingParams,
                             grid_step: float = 1e-3, initial: str | float = "empty") -> IntensityTrace:
    """Marginal target intensity ``lambda_X[x_hist](t)`` with jumps at target spikes."""
    return run_coupled_filter(x, y_unobserved_model, grid_step, initial, record=True).trace()


def coupled_filter_evaluators(params: CoupledSpikingParams):
    """Intensity and its antiderivative in ``t^y``, for the step-level API."""
    return (lambda s: coupled_intensity(s, params),
            lambda s: coupled_cumulative(np.where(np.isfinite(s), s, params.t_cut), params))

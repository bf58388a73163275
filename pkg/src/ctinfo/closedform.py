"""Closed-form rates of the point-process models.

Event-driven model summary (drive period ``delta_y``, window ``delta_x``,
spike probability ``c``)::

    M_ring        = (c + (1 - c) ln(1 - c)) / delta_y
    M_st          = ((1 - c) ln(1 - c) + c (1 + ln(delta_y / delta_x))) / delta_y
    overestimate  = (c / delta_y) ln(delta_y / delta_x) = M_st - M_ring
    xi            = c / (delta_y delta_x) int_0^delta_y G(t) ln G(t) dt,  G(t) = F(t) - F(t - delta_x)

``M_ring`` is the time-averaged memory rate against the phase-aware Markov
rate. ``M_st`` uses the constant rate ``c / delta_y`` that a stationarity
assumption would give. Against the phase-marginal Markov rate
``(c / delta_x) G(t)`` the rate is ``M_ring - xi``, so
``M_st - (M_ring - xi) = overestimate + xi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .exceptions import InsufficientDataError, ParameterError
from .paths import EventPath
from .simulate import EventDrivenParams, PhaseDistribution


# ---------------------------------------------------------------------------
# Refractory Poisson process
# ---------------------------------------------------------------------------


def refractory_closed_forms(mu: float, delta_x: float) -> dict[str, float]:
    """Markov rate, memory rate and the memory-maximising refractory period.

    Returns
    -------
    dict
        ``lambda0 = mu/(1+mu dx)``, ``M_rate = mu ln(1+mu dx)/(1+mu dx)``,
        ``argmax_delta_x = (e-1)/mu`` and ``max_rate = mu/e``.
    """
    if not mu > 0 or delta_x < 0:
        raise ParameterError("need mu > 0 and delta_x >= 0")
    a = mu * delta_x
    return {
        "lambda0": mu / (1.0 + a),
        "M_rate": mu * math.log1p(a) / (1.0 + a),
        "argmax_delta_x": (math.e - 1.0) / mu,
        "max_rate": mu / math.e,
    }


def refractory_memory_rate(mu: float, delta_x) -> np.ndarray:
    """Vectorised ``mu ln(1 + mu dx) / (1 + mu dx)``."""
    a = mu * np.asarray(delta_x, dtype=float)
    return mu * np.log1p(a) / (1.0 + a)


def refractory_elusive_information(mu: float, delta_x: float) -> float:
    """``ln(1 + mu dx) - mu dx / (1 + mu dx)``: the integrated truncation deficit."""
    a = mu * delta_x
    return math.log1p(a) - a / (1.0 + a)


# ---------------------------------------------------------------------------
# Event-driven process
# ---------------------------------------------------------------------------


def event_driven_lambda0(c: float, delta_x: float, delta_y: float, t) -> np.ndarray:
    """History-free rate with a known phase of zero: ``c/delta_x`` in windows, else 0."""
    u = np.mod(np.asarray(t, dtype=float), delta_y)
    return np.where(u <= delta_x, c / delta_x, 0.0)


def event_driven_Mdot(c: float, delta_x: float, delta_y: float, t) -> np.ndarray:
    """Instantaneous expected memory rate at time ``t`` (phase zero).

    ``(c/delta_x) ln(delta_x / (delta_x - c (t - n delta_y)))`` inside the
    window ``[n delta_y, n delta_y + delta_x]`` and zero outside.
    """
    u = np.mod(np.asarray(t, dtype=float), delta_y)
    inside = u <= delta_x
    arg = np.where(inside, 1.0 - c * u / delta_x, 1.0)
    with np.errstate(divide="ignore"):
        val = -(c / delta_x) * np.log(arg)
    return np.where(inside, val, 0.0)


def _xlog1m(c: float) -> float:
    """``(1 - c) ln(1 - c)`` with its limit 0 at ``c = 1``."""
    return float(xlogy(1.0 - c, 1.0 - c))


def event_driven_ring_rate(c: float, delta_y: float) -> float:
    return (c + _xlog1m(c)) / delta_y


def event_driven_stationary_rate(c: float, delta_x: float, delta_y: float) -> float:
    return (_xlog1m(c) + c * (1.0 + math.log(delta_y / delta_x))) / delta_y


def event_driven_overestimate(c: float, delta_x: float, delta_y: float) -> float:
    return c / delta_y * math.log(delta_y / delta_x)


def _int_log_linear(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Mean of ``ln`` over a segment whose argument runs linearly from ``a`` to ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    same = np.abs(b - a) <= 1e-12 * np.maximum(np.abs(a), np.abs(b))
    with np.errstate(divide="ignore", invalid="ignore"):
        general = (xlogy(b, b) - xlogy(a, a)) / (b - a) - 1.0
        flat = np.log(np.maximum(0.5 * (a + b), 1e-300))
    return np.where(same, flat, general)


def xi_integral(params: EventDrivenParams, n_cells: int = 2000,
                check_refinement: bool = True) -> float:
    """Phase-uncertainty correction ``xi`` of the stationary-assumption rate.

    The phase density is taken piecewise constant on ``n_cells`` cells, so
    its periodic CDF ``F`` is piecewise linear and so is
    ``G(t) = F(t) - F(t - delta_x)``. The inner integral of ``ln G`` is done
    exactly per cell, which keeps logarithmic zeros of ``G`` integrable. The
    outer phase integral uses the trapezoid rule. A delta phase gives
    ``G = 1`` on its window and ``xi = 0`` exactly.
    """
    c, dx, dy = params.c, params.delta_x, params.delta_y
    pd = params.phase_dist
    if pd.kind == "delta" or c == 0:
        return 0.0
    if pd.kind == "uniform":
        return c / (dy * dx) * dx * math.log(dx / dy)
    val = _xi_cells(c, dx, dy, pd, n_cells)
    if check_refinement:
        coarse = _xi_cells(c, dx, dy, pd, n_cells // 2)
        if abs(coarse - val) > 1e-4 * max(abs(val), 1e-12):
            warnings.warn(f"xi refinement change {abs(coarse - val):.3g} exceeds 1e-4 relative",
                          RuntimeWarning, stacklevel=2)
    return val


def _xi_cells(c: float, dx: float, dy: float, pd: PhaseDistribution, n: int) -> float:
    p = pd.cell_masses(n, dy)
    delta = dy / n
    cdf = np.concatenate([[0.0], np.cumsum(p)])
    nodes = np.arange(n + 1) * delta

    def F(t):
        k = np.floor(t / dy)
        return k + np.interp(t - k * dy, nodes, cdf)

    G = np.clip(F(nodes) - F(nodes - dx), 0.0, 1.0)
    # Integral of ln G over each cell, exact for linear G.
    cell_int = _int_log_linear(G[:-1], G[1:]) * delta
    # H(phi) = int_phi^{phi + dx} ln G at cell nodes via periodic cumulation.
    cum = np.concatenate([[0.0], np.cumsum(np.tile(cell_int, 2))])
    shift = dx / delta
    k_int = int(math.floor(shift))
    frac = shift - k_int
    idx = np.arange(n + 1)
    H = cum[idx + k_int] - cum[idx]
    if frac > 0:
        H = H + frac * (cum[idx + k_int + 1] - cum[idx + k_int])
    outer = np.sum(p * 0.5 * (H[:-1] + H[1:]))
    return float(c / (dy * dx) * outer)


@dataclass(frozen=True)
class EventDrivenReport:
    """Closed-form summary of the event-driven model.

    Attributes
    ----------
    lambda0_of_t, Mdot_of_t : callable
        Periodic evaluators for a drive phase of zero.
    M_ring : float
        Time-averaged memory rate with the phase known.
    M_st : float
        Rate under the stationarity assumption.
    overestimate : float
        ``M_st - M_ring``.
    xi : float
        Phase-uncertainty correction, in ``[-overestimate, 0]``.
    M_phase_marginal : float
        Rate against the phase-marginal Markov intensity, ``M_ring - xi``.
        It satisfies ``M_st - M_phase_marginal = overestimate + xi``.
    """

    lambda0_of_t: Callable[[np.ndarray], np.ndarray]
    Mdot_of_t: Callable[[np.ndarray], np.ndarray]
    M_ring: float
    M_st: float
    overestimate: float
    xi: float
    M_phase_marginal: float

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in
                ("M_ring", "M_st", "overestimate", "xi", "M_phase_marginal")}


def event_driven_report(params: EventDrivenParams, n_cells: int = 2000) -> EventDrivenReport:
    """All closed-form event-driven quantities, with the ``xi`` bounds asserted."""
    c, dx, dy = params.c, params.delta_x, params.delta_y
    ring = event_driven_ring_rate(c, dy)
    st = event_driven_stationary_rate(c, dx, dy)
    over = event_driven_overestimate(c, dx, dy)
    xi = xi_integral(params, n_cells)
    slack = 1e-9 * max(over, 1.0)
    if not (-over - slack <= xi <= slack):
        raise ArithmeticError(f"xi={xi} violates its bounds [-{over}, 0]")
    return EventDrivenReport(
        lambda0_of_t=lambda t: event_driven_lambda0(c, dx, dy, t),
        Mdot_of_t=lambda t: event_driven_Mdot(c, dx, dy, t),
        M_ring=ring, M_st=st, overestimate=over, xi=xi, M_phase_marginal=ring - xi)


def phase_recovery(x: EventPath, delta_x: float, delta_y: float) -> float:
    """Estimate the drive phase from the shortest inter-spike interval.

    The shortest possible gap is ``delta_y - delta_x``: one spike at the end
    of a window and the next at the start of the following window. The
    second spike of the shortest observed gap therefore marks a window start
    (or lies just after it), so its time modulo ``delta_y`` estimates the phase
    from above.
    """
    ev = x.events
    if ev.size < 2:
        raise InsufficientDataError("phase recovery needs at least two spikes")
    i = int(np.argmin(np.diff(ev)))
    return float(math.fmod(ev[i + 1], delta_y) % delta_y)

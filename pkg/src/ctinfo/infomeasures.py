"""Pathwise information functionals and their estimators.

For a point process observed on ``[t0, t]`` and two candidate intensities
``lam_a`` (numerator) and ``lam_b`` (reference), the log likelihood ratio of
the two path measures is

    sum_i ln(lam_a(t_i-) / lam_b(t_i-)) - int (lam_a - lam_b) dt.

With (full history, history-free) intensities it is the pathwise active
memory utilisation. With (source-conditioned, source-marginal) intensities it
is the pathwise transfer entropy. The sum is the transition (jump) part. The
integral is the waiting-time part, whose running rate is ``lam_b - lam_a``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .exceptions import (BinningError, DivergenceError, ImpossibleEventError,
                         InsufficientDataError, NonEquivalentMeasuresError, ParameterError)
from .paths import (EventPath, InfoTrace, IntensityTrace, _segment_integral, align_traces,
                    reconstruct_cumulative)
from .simulate import RefractoryParams


@dataclass(frozen=True)
class RateEstimate:
    """Ergodic rate estimate (nats/s) with a batch-means standard error."""

    value: float
    stderr: float
    n_events: int
    horizon: float

    def as_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr,
                "n_events": self.n_events, "horizon": self.horizon}


# ---------------------------------------------------------------------------
# Pathwise functionals
# ---------------------------------------------------------------------------


def _events_on(x: EventPath, trace: IntensityTrace) -> np.ndarray:
    ev = x.events
    return ev[(ev >= trace.t_start) & (ev <= trace.t_stop)]


def log_ratio_at_events(events: np.ndarray, lam_num: IntensityTrace,
                        lam_ref: IntensityTrace) -> np.ndarray:
    """Jump terms ``ln(lam_num(t_i-) / lam_ref(t_i-))`` at the given events."""
    if events.size == 0:
        return np.zeros(0)
    a = np.asarray(lam_num.left_limit(events))
    b = np.asarray(lam_ref.left_limit(events))
    if np.any(a <= 0):
        t_bad = events[np.argmax(a <= 0)]
        raise ImpossibleEventError(f"observed event at t={t_bad} has zero intensity")
    if np.any(b <= 0):
        t_bad = events[np.argmax(b <= 0)]
        raise NonEquivalentMeasuresError(
            f"reference intensity vanishes at observed event t={t_bad}; measures are not equivalent")
    return np.log(a / b)


def _pathwise(x: EventPath, lam_num: IntensityTrace, lam_ref: IntensityTrace):
    events = _events_on(x, lam_num)
    times, (a, b) = align_traces([lam_num, lam_ref], force_pairs=events)
    jumps = log_ratio_at_events(events, lam_num, lam_ref)
    rate = b - a
    cum = reconstruct_cumulative(times, rate, events, jumps)
    return times, cum, events, jumps, rate


def pathwise_memory(x: EventPath, lambda_full: IntensityTrace,
                    lambda_markov: IntensityTrace) -> InfoTrace:
    """Pathwise active memory utilisation along ``x``.

    Parameters
    ----------
    x : EventPath
        Observed events. Events outside the trace support are ignored.
    lambda_full : IntensityTrace
        Intensity given the full own history.
    lambda_markov : IntensityTrace
        History-free (Markov) intensity.

    Returns
    -------
    InfoTrace
        The memory fields are filled; the transfer fields are zero.
    """
    times, cum, ev, jumps, rate = _pathwise(x, lambda_full, lambda_markov)
    z = np.zeros_like(times)
    return InfoTrace(times, cum, z, ev, jumps, np.zeros_like(jumps), rate, z)


def pathwise_transfer(x: EventPath, lambda_cond: IntensityTrace,
                      lambda_full: IntensityTrace) -> InfoTrace:
    """Pathwise transfer entropy: the source-conditioned vs own-history intensity."""
    times, cum, ev, jumps, rate = _pathwise(x, lambda_cond, lambda_full)
    z = np.zeros_like(times)
    return InfoTrace(times, z, cum, ev, np.zeros_like(jumps), jumps, z, rate)


def pathwise_decomposition(x: EventPath, lambda_cond: IntensityTrace, lambda_full: IntensityTrace,
                           lambda_markov: IntensityTrace) -> InfoTrace:
    """Memory and transfer together on one node grid."""
    events = _events_on(x, lambda_full)
    times, (c, f, m) = align_traces([lambda_cond, lambda_full, lambda_markov], force_pairs=events)
    jm = log_ratio_at_events(events, lambda_full, lambda_markov)
    jt = log_ratio_at_events(events, lambda_cond, lambda_full)
    rm, rt = m - f, f - c
    cm = reconstruct_cumulative(times, rm, events, jm)
    ct = reconstruct_cumulative(times, rt, events, jt)
    return InfoTrace(times, cm, ct, events, jm, jt, rm, rt)


# ---------------------------------------------------------------------------
# Ergodic rates
# ---------------------------------------------------------------------------


def ergodic_rate(x: EventPath, lam_num: IntensityTrace, lam_ref: IntensityTrace,
                 burn_in: float = 0.0, n_batches: int = 20, discard_first: bool = True,
                 include_waiting: bool = False) -> RateEstimate:
    """Time-averaged log likelihood ratio with batch-means standard error.

    Parameters
    ----------
    burn_in : float
        Initial stretch of the window that is skipped before batching.
    n_batches : int
        Number of equal batches over the remaining horizon.
    discard_first : bool
        Drop the first batch as an additional burn-in.
    include_waiting : bool
        Add the waiting-time integral. By default only jump terms are used;
        the waiting part has zero mean, so leaving it out reduces variance.
    """
    if n_batches < 2:
        raise ParameterError("need at least two batches")
    a = lam_num.t_start + burn_in
    b = lam_num.t_stop
    if not b > a:
        raise InsufficientDataError("burn-in covers the whole window")
    edges = np.linspace(a, b, n_batches + 1)
    ev = x.events
    ev = ev[(ev >= a) & (ev <= b)]
    if ev.size < 2 * n_batches and ev.size > 0:
        raise InsufficientDataError(f"{ev.size} events cannot support {n_batches} batches")
    jumps = log_ratio_at_events(ev, lam_num, lam_ref)
    which = np.clip(np.searchsorted(edges, ev, side="right") - 1, 0, n_batches - 1)
    sums = np.bincount(which, weights=jumps, minlength=n_batches)
    if include_waiting:
        sums = sums - (_segment_integral(lam_num, edges) - _segment_integral(lam_ref, edges))
    width = edges[1] - edges[0]
    rates = sums / width
    first = 1 if discard_first else 0
    used = rates[first:]
    n_used_events = int(np.sum(which >= first))
    return RateEstimate(float(used.mean()), float(used.std(ddof=1) / math.sqrt(used.size)),
                        n_used_events, float(width * used.size))


def ergodic_memory_rate(x: EventPath, lambda_full: IntensityTrace, lambda_markov: IntensityTrace,
                        **kwargs) -> RateEstimate:
    """Ergodic active memory utilisation rate; see :func:`ergodic_rate` for options."""
    return ergodic_rate(x, lambda_full, lambda_markov, **kwargs)


def ergodic_transfer_rate(x: EventPath, lambda_cond: IntensityTrace, lambda_full: IntensityTrace,
                          **kwargs) -> RateEstimate:
    """Ergodic transfer entropy rate; see :func:`ergodic_rate` for options."""
    return ergodic_rate(x, lambda_cond, lambda_full, **kwargs)


def truncated_memory_rate(x: EventPath, lambda_trunc_s: IntensityTrace,
                          lambda_markov: IntensityTrace, **kwargs) -> RateEstimate:
    """Rate of ``ln(lambda^(s) / lambda^0)`` jump terms.

    ``lambda^(s)`` conditions only on the last ``s`` seconds of own history.
    The events of ``x`` come from the true process, so the average of these
    terms is the truncated-history memory rate.
    """
    return ergodic_rate(x, lambda_trunc_s, lambda_markov, **kwargs)


# ---------------------------------------------------------------------------
# Elusive information
# ---------------------------------------------------------------------------


def refractory_truncated_rate(params: RefractoryParams, s: float) -> float:
    """Truncated-history memory rate of the refractory process, from renewal theory."""
    mu, dx = params.mu, params.delta_x
    lam0 = mu / (1.0 + mu * dx)
    s = min(max(s, 0.0), dx)
    return lam0 * (math.log1p(mu * dx) - math.log1p(mu * (dx - s)))


def elusive_information(params: RefractoryParams, x: EventPath | None = None,
                        n_s: int = 41, burn_in: float = 0.0, tol: float = 1e-9) -> float:
    """Integral over ``s`` of the memory-rate deficit of an ``s``-truncated history.

    The integrand vanishes for ``s >= delta_x``, the memory depth of the
    refractory model. Without ``x`` the truncated rates come from renewal
    theory and the integral is done by adaptive quadrature. With ``x`` they
    are estimated along the path at ``n_s`` history lengths and integrated
    by the trapezoid rule.
    """
    from .intensities import refractory_intensity_trace, refractory_truncated_trace

    mu, dx = params.mu, params.delta_x
    if dx == 0:
        return 0.0
    full = mu * math.log1p(mu * dx) / (1.0 + mu * dx)
    if x is None:
        tail = full - refractory_truncated_rate(params, dx)
        if abs(tail) > tol:
            raise DivergenceError("integrand does not vanish at the memory depth")
        val, _ = integrate.quad(lambda s: full - refractory_truncated_rate(params, s), 0.0, dx,
                                epsabs=1e-13, epsrel=1e-12)
        return float(val)
    lam0 = IntensityTrace.constant(mu / (1.0 + mu * dx), x.window)
    lam_full = refractory_intensity_trace(x, params)
    m_full = ergodic_rate(x, lam_full, lam0, burn_in=burn_in).value
    s_grid = np.linspace(0.0, dx, n_s)
    deficit = [m_full - ergodic_rate(x, refractory_truncated_trace(x, params, s), lam0,
                                     burn_in=burn_in).value for s in s_grid]
    return float(integrate.trapezoid(deficit, s_grid))


# ---------------------------------------------------------------------------
# Time-binning caution
# ---------------------------------------------------------------------------


def _plugin_mi(joint_counts: dict[tuple[int, int], int]) -> float:
    keys = np.array(list(joint_counts.keys()), dtype=np.uint64).reshape(-1, 2)
    n = np.array(list(joint_counts.values()), dtype=float)
    total = n.sum()
    _, hist_idx = np.unique(keys[:, 0], return_inverse=True)
    n_hist = np.bincount(hist_idx, weights=n)
    n_next = np.bincount(keys[:, 1].astype(np.int64), weights=n, minlength=2)
    p = n / total
    return float(np.sum(p * np.log(n * total / (n_hist[hist_idx] * n_next[keys[:, 1].astype(np.int64)]))))


def binned_storage_estimate(x: EventPath, dt: float, k: int, seed: int = 0,
                            chunk_bins: int = 4_000_000) -> float:
    """Naive binned storage rate: plug-in MI(next bin; last ``k`` bins) / ``dt``.

    Histories are identified by a 64-bit additive hash of their spike lags,
    which is exact up to astronomically unlikely collisions. The counts are
    accumulated chunk by chunk, so memory stays bounded for long paths.
    """
    if k < 1 or dt <= 0:
        raise ParameterError("need k >= 1 and dt > 0")
    w = x.window
    n_bins = int(math.floor(w.duration / dt))
    if n_bins <= k + 1:
        raise InsufficientDataError("path shorter than one history window")
    ev = x.in_observation()
    idx = np.floor((ev - w.t0) / dt).astype(np.int64)
    idx = idx[idx < n_bins]
    if np.any(np.diff(idx) == 0):
        raise BinningError(f"bin width {dt} places two events in one bin")
    keys = np.random.default_rng(seed).integers(1, np.iinfo(np.uint64).max, size=k,
                                                dtype=np.uint64, endpoint=False)
    # Even keys keep the lowest bit free to carry the next-bin value.
    keys &= np.uint64(0xFFFFFFFFFFFFFFFE)
    counts: dict[tuple[int, int], int] = {}
    # Sample n uses history bins n-k+1..n and predicts bin n+1.
    start = k - 1
    stop = n_bins - 1
    for c0 in range(start, stop, chunk_bins):
        c1 = min(c0 + chunk_bins, stop)
        h = np.zeros(c1 - c0, dtype=np.uint64)
        sel = idx[(idx > c0 - k) & (idx < c1)]
        for lag in range(k):
            pos = sel + lag - c0
            ok = (pos >= 0) & (pos < h.size)
            np.add.at(h, pos[ok], keys[lag])
        nxt = np.zeros(c1 - c0, dtype=np.uint64)
        spk = idx[(idx >= c0 + 1) & (idx < c1 + 1)] - 1 - c0
        nxt[spk] = 1
        combined, cnt = np.unique(h | nxt, return_counts=True)
        for key, cc in zip(combined.tolist(), cnt.tolist()):
            pair = (key & ~1, key & 1)
            counts[pair] = counts.get(pair, 0) + cc
    return _plugin_mi(counts) / dt


def binned_storage_demo(x: EventPath, dt_bins: Sequence[float], k: int | None = None,
                        history_span: float | None = None) -> list[tuple[float, float]]:
    """Table of ``(dt, naive estimate)`` for several bin widths.

    Give either a fixed bin count ``k`` or a fixed ``history_span`` (so that
    ``k = round(history_span / dt)``).
    """
    if (k is None) == (history_span is None):
        raise ParameterError("give exactly one of k and history_span")
    rows = []
    for dt in dt_bins:
        kk = k if k is not None else max(int(round(history_span / dt)), 1)
        rows.append((float(dt), binned_storage_estimate(x, dt, kk)))
    return rows


# ---------------------------------------------------------------------------
# Discrete-time oracle
# ---------------------------------------------------------------------------


def _pair_stationary(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    T = np.zeros((n * n, n * n))
    for a, b, c in itertools.product(range(n), repeat=3):
        T[a * n + b, b * n + c] = P[a, b, c]
    vals, vecs = np.linalg.eig(T.T)
    v = np.real(vecs[:, np.argmin(np.abs(vals - 1.0))])
    v = v / v.sum()
    return v.reshape(n, n)


def discrete_storage_decomposition(P: np.ndarray) -> dict[str, float]:
    """Storage terms of a stationary order-2 chain by exhaustive enumeration.

    ``P[a, b, c] = p(x_{n+1} = c | x_{n-1} = a, x_n = b)``. Returns the
    active information storage ``A`` (over the two-step past, which is the
    full past for an order-2 chain), the one-step predictive part ``I``, and
    the memory part ``M``. Each is evaluated directly from its own
    definition; the identity ``A = I + M`` is therefore a check.
    """
    P = np.asarray(P, dtype=float)
    pi2 = _pair_stationary(P)
    joint = pi2[:, :, None] * P  # p(a, b, c)
    p_bc = joint.sum(axis=0)
    p_b = p_bc.sum(axis=1)
    p_c = joint.sum(axis=(0, 1))
    A = I = M = 0.0
    n = P.shape[0]
    for a, b, c in itertools.product(range(n), repeat=3):
        pj = joint[a, b, c]
        if pj <= 0:
            continue
        p_c_given_ab = P[a, b, c]
        p_c_given_b = p_bc[b, c] / p_b[b]
        A += pj * math.log(p_c_given_ab / p_c[c])
        M += pj * math.log(p_c_given_ab / p_c_given_b)
    for b, c in itertools.product(range(n), repeat=2):
        if p_bc[b, c] > 0:
            I += p_bc[b, c] * math.log(p_bc[b, c] / (p_b[b] * p_c[c]))
    return {"A": A, "I": I, "M": M}


def discrete_pathwise_memory_rate(P: np.ndarray, n_steps: int = 6) -> float:
    """Expected pathwise memory per step, by enumerating every path of length ``n_steps``.

    This applies the log likelihood ratio between the full-history chain and
    its Markov (one-step) marginal, which is the jump-process construction
    used in continuous time, to the discrete chain.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    pi2 = _pair_stationary(P)
    joint = pi2[:, :, None] * P
    p_bc = joint.sum(axis=0)
    markov = p_bc / p_bc.sum(axis=1, keepdims=True)
    total = 0.0
    for path in itertools.product(range(n), repeat=n_steps + 2):
        prob = pi2[path[0], path[1]]
        llr = 0.0
        for i in range(2, n_steps + 2):
            p = P[path[i - 2], path[i - 1], path[i]]
            prob *= p
            if p > 0:
                llr += math.log(p / markov[path[i - 1], path[i]])
        total += prob * llr
    return total / n_steps

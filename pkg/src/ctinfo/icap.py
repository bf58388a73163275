"""Instantaneous predictive capacity: lagged mutual information and its small-lag expansion.

The lag-``dt`` mutual information between a stationary process and itself is
expanded as::

    I(dt) ~ c00 + c01 ln(dt) + c10 dt + c11 dt ln(dt) + ...

A nonzero ``c01`` means the instantaneous part diverges as ``dt -> 0``. A
nonzero ``c11`` means the storage rate diverges.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import ConditioningError, InsufficientDataError, ParameterError

_COEFFS = ("c00", "c01", "c10", "c11")


@dataclass(frozen=True)
class CoefficientSet:
    """Asymptotic coefficients with explicit divergence markers.

    A coefficient named in ``divergent`` has no numeric value (``None``); its
    sign is kept in ``divergent_sign``. ``residual`` is set for fitted sets.
    Coefficients with magnitude at most ``zero_tol`` count as zero when the
    divergence properties are decided; fits set it to reflect their accuracy.
    """

    c00: float | None = 0.0
    c01: float | None = 0.0
    c10: float | None = 0.0
    c11: float | None = 0.0
    divergent: frozenset = field(default_factory=frozenset)
    divergent_sign: Mapping[str, int] = field(default_factory=dict)
    residual: float | None = None
    zero_tol: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "divergent", frozenset(self.divergent))
        for name in _COEFFS:
            v = getattr(self, name)
            if name in self.divergent:
                if v is not None:
                    raise ParameterError(f"flagged coefficient {name} must not carry a value")
            elif v is None or not math.isfinite(v):
                raise ParameterError(f"unflagged coefficient {name} must be finite")

    @property
    def instantaneous_divergent(self) -> bool:
        """True if the instantaneous part diverges (``c01 != 0``)."""
        return "c01" in self.divergent or (self.c01 is not None and abs(self.c01) > self.zero_tol)

    @property
    def rate_divergent(self) -> bool:
        """True if the storage rate diverges (a ``dt ln dt`` term or a flagged ``c10``)."""
        return ("c10" in self.divergent or "c11" in self.divergent
                or (self.c11 is not None and abs(self.c11) > self.zero_tol))

    def as_dict(self) -> dict:
        out: dict = {}
        for name in _COEFFS:
            if name in self.divergent:
                sign = self.divergent_sign.get(name, 1)
                out[name] = {"divergent": True, "sign": "+" if sign > 0 else "-"}
            else:
                out[name] = getattr(self, name)
        out["instantaneous_divergent"] = self.instantaneous_divergent
        out["rate_divergent"] = self.rate_divergent
        if self.residual is not None:
            out["residual"] = self.residual
        return out

    def evaluate(self, dt) -> np.ndarray:
        """Evaluate the truncated expansion (flagged coefficients are an error)."""
        if self.divergent:
            raise ParameterError("cannot evaluate an expansion with divergent coefficients")
        dt = np.asarray(dt, dtype=float)
        ln = np.log(dt)
        return self.c00 + self.c01 * ln + self.c10 * dt + self.c11 * dt * ln


@dataclass(frozen=True)
class MasterEqModel:
    """Finite-state jump process with rates ``W[j | i]`` for ``i -> j``."""

    states: tuple
    rates: Mapping[tuple[Hashable, Hashable], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if len(set(self.states)) != len(self.states) or len(self.states) < 2:
            raise ParameterError("need at least two distinct states")
        for (i, j), w in self.rates.items():
            if i not in self.states or j not in self.states or i == j:
                raise ParameterError(f"invalid transition {i!r} -> {j!r}")
            if not (math.isfinite(w) and w >= 0):
                raise ParameterError("rates must be finite and nonnegative")

    @classmethod
    def two_state(cls, kplus: float, kminus: float) -> "MasterEqModel":
        """States ``A`` and ``B`` with ``A -> B`` at ``kplus`` and ``B -> A`` at ``kminus``."""
        return cls(("A", "B"), {("A", "B"): kplus, ("B", "A"): kminus})

    def rate_matrix(self) -> np.ndarray:
        """``W[i, j]`` = rate from state ``i`` to state ``j`` (zero diagonal)."""
        n = len(self.states)
        idx = {s: k for k, s in enumerate(self.states)}
        W = np.zeros((n, n))
        for (i, j), w in self.rates.items():
            W[idx[i], idx[j]] = w
        return W

    def generator(self) -> np.ndarray:
        W = self.rate_matrix()
        return W - np.diag(W.sum(axis=1))


def stationary_distribution(model: MasterEqModel) -> np.ndarray:
    """Stationary probabilities of an irreducible master equation."""
    W = model.rate_matrix()
    n_comp, _ = connected_components(W > 0, directed=True, connection="strong")
    if n_comp != 1:
        raise ParameterError("master equation is reducible; stationary law is not unique")
    Q = model.generator()
    M = np.vstack([Q.T, np.ones(len(model.states))])
    rhs = np.zeros(len(model.states) + 1)
    rhs[-1] = 1.0
    P, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    P = np.clip(P, 0.0, None)
    P /= P.sum()
    if np.max(np.abs(P @ Q)) > 1e-12 * max(1.0, np.abs(Q).max()):
        raise ArithmeticError("stationary balance residual too large")
    return P


def master_eq_coeffs(model: MasterEqModel) -> CoefficientSet:
    """Small-lag coefficients from the one-transition expansion.

    ``c00 = -sum P ln P``,
    ``c10 = sum_i sum_{j != i} P_i W_ji (ln(W_ji P_i / P_j) - 1)``,
    ``c11 = sum_i sum_{j != i} P_i W_ji``, ``c01 = 0``.
    """
    P = stationary_distribution(model)
    W = model.rate_matrix()
    c00 = -float(np.sum(P[P > 0] * np.log(P[P > 0])))
    c10 = c11 = 0.0
    n = P.size
    for i in range(n):
        for j in range(n):
            if i != j and W[i, j] > 0:
                flux = P[i] * W[i, j]
                c10 += flux * (math.log(W[i, j] * P[i] / P[j]) - 1.0)
                c11 += flux
    return CoefficientSet(c00=c00, c01=0.0, c10=c10, c11=c11)


def two_state_coeffs(kplus: float, kminus: float) -> CoefficientSet:
    """Closed-form coefficients of the two-state process."""
    K = kplus + kminus
    pa, pb = kminus / K, kplus / K
    c00 = -(pa * math.log(pa) + pb * math.log(pb))
    prod = kplus * kminus
    return CoefficientSet(c00=c00, c01=0.0, c10=prod / K * (math.log(prod) - 2.0), c11=2.0 * prod / K)


def spiking_coeffs(lambda0: float) -> CoefficientSet:
    """Spike-train limit: ``c00 = 0``, ``c10`` divergent (+), ``c11 = 2 lambda0``."""
    if lambda0 < 0:
        raise ParameterError("lambda0 must be nonnegative")
    return CoefficientSet(c00=0.0, c01=0.0, c10=None, c11=2.0 * lambda0,
                          divergent=frozenset({"c10"}), divergent_sign={"c10": 1})


def two_state_transition(kplus: float, kminus: float, delta_t: float) -> np.ndarray:
    """Exact lag-``delta_t`` transition matrix of the two-state chain (rows = from)."""
    K = kplus + kminus
    pa, pb = kminus / K, kplus / K
    e = math.exp(-K * delta_t)
    one_minus = -math.expm1(-K * delta_t)
    return np.array([[pa + pb * e, pb * one_minus],
                     [pa * one_minus, pb + pa * e]])


def parametric_ix_two_state(kplus: float, kminus: float, delta_t) -> np.ndarray | float:
    """Stationary mutual information between states ``delta_t`` apart."""
    if not (kplus > 0 and kminus > 0):
        raise ParameterError("rates must be positive")
    dts = np.atleast_1d(np.asarray(delta_t, dtype=float))
    if np.any(dts <= 0):
        raise ParameterError("delta_t must be positive")
    K = kplus + kminus
    pa, pb = kminus / K, kplus / K
    out = np.empty(dts.size)
    for n, dt in enumerate(dts):
        om = -math.expm1(-K * dt)
        # ln(p(j|i) / p(j)) written to avoid cancellation at small lags.
        l_aa = math.log1p(pb / pa * (1.0 - om))  # (pa + pb e)/pa
        l_bb = math.log1p(pa / pb * (1.0 - om))
        l_ab = math.log(om)  # pb om / pb
        l_ba = math.log(om)
        out[n] = (pa * (pa + pb * (1.0 - om)) * l_aa + pa * pb * om * l_ab
                  + pb * pa * om * l_ba + pb * (pb + pa * (1.0 - om)) * l_bb)
    return float(out[0]) if np.ndim(delta_t) == 0 else out


def fit_asymptotic_coeffs(samples: Sequence[tuple[float, float]], max_condition: float = 1e12,
                          warn_residual: float = 1e-6, zero_rel: float = 1e-3) -> CoefficientSet:
    """Weighted least squares on the basis ``{1, ln dt, dt, dt ln dt}``.

    Parameters
    ----------
    samples : sequence of (dt, value)
        At least 8 samples spanning at least two decades of ``dt``.
    max_condition : float
        Largest acceptable condition number of the column-scaled, weighted
        design matrix.
    warn_residual : float
        A weighted RMS residual above this (relative to the data scale)
        triggers a warning that basis terms may be missing.
    zero_rel : float
        Fitted coefficients smaller than this fraction of the largest one are
        treated as zero by the divergence flags (the values are kept).

    Notes
    -----
    Weights are ``1/dt`` in the squared-error sum. Residuals of the rate terms
    scale like ``dt``, so this weighting equalises relative error across
    decades.
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 8 or arr.shape[1] != 2:
        raise InsufficientDataError("need at least 8 (dt, value) samples")
    dt, y = arr[:, 0], arr[:, 1]
    if np.any(dt <= 0):
        raise ParameterError("dt must be positive")
    if math.log10(dt.max() / dt.min()) < 2.0 - 1e-9:
        raise InsufficientDataError("samples must span at least two decades of dt")
    order = np.argsort(dt, kind="stable")
    dt, y = dt[order], y[order]
    ln = np.log(dt)
    X = np.column_stack([np.ones_like(dt), ln, dt, dt * ln])
    sw = 1.0 / np.sqrt(dt)
    Xw = X * sw[:, None]
    yw = y * sw
    scale = np.linalg.norm(Xw, axis=0)
    Xs = Xw / scale
    cond = np.linalg.cond(Xs)
    if not cond < max_condition:
        raise ConditioningError(f"design matrix condition number {cond:.3g} exceeds {max_condition:.3g}")
    beta_s, *_ = np.linalg.lstsq(Xs, yw, rcond=None)
    beta = beta_s / scale
    resid = yw - Xw @ beta
    rms = float(np.sqrt(np.mean(resid ** 2)) / max(np.sqrt(np.mean(yw ** 2)), 1e-300))
    if rms > warn_residual:
        warnings.warn(f"relative fit residual {rms:.3g}; basis may be missing terms",
                      RuntimeWarning, stacklevel=2)
    return CoefficientSet(c00=float(beta[0]), c01=float(beta[1]), c10=float(beta[2]),
                          c11=float(beta[3]), residual=rms,
                          zero_tol=zero_rel * float(np.max(np.abs(beta))))


def sample_grid(f, dt_min: float, dt_max: float, points: int = 40) -> list[tuple[float, float]]:
    """Evaluate ``f`` on a log-spaced lag grid."""
    dts = np.geomspace(dt_min, dt_max, points)
    return [(float(d), float(f(d))) for d in dts]

"""Linearly coupled Ornstein-Uhlenbeck processes.

The model is::

    dx = (A x + B y) dt + V_x dW^x
    dy = (C x + D y) dt + V_y dW^y,     corr(dW^x, dW^y) = rho.

In the stationary state the marginal dynamics of ``x`` that condition only on
the present value are again linear, with drift ``-kappa_eff x``. The Girsanov
log likelihood ratio of the full dynamics of ``x`` against that Markov
marginal accumulates ``f^2 dt / 2 + f dW^x`` with
``f = (A x + B y + kappa_eff x) / V_x``. Its expected rate is the sum of the
memory and transfer rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numba
import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .exceptions import DivergenceError, ParameterError, SingularParameterError
from .paths import InfoTrace, SamplePath, TimeWindow
from .simulate import make_rng, run_ensemble


@dataclass(frozen=True)
class OUParams:
    """Drift constants, noise strengths and noise correlation of the coupled pair."""

    A: float
    B: float
    C: float
    D: float
    Vx: float = 1.0
    Vy: float = 1.0
    rho: float = 0.0

    def __post_init__(self) -> None:
        vals = (self.A, self.B, self.C, self.D, self.Vx, self.Vy, self.rho)
        if not all(np.isfinite(v) for v in vals):
            raise ParameterError("OU parameters must be finite")
        if self.Vx < 0 or self.Vy < 0:
            raise ParameterError("noise strengths must be nonnegative")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError("rho must lie in [-1, 1]")

    @property
    def drift(self) -> np.ndarray:
        return np.array([[self.A, self.B], [self.C, self.D]], dtype=float)

    @property
    def diffusion(self) -> np.ndarray:
        c = self.rho * self.Vx * self.Vy
        return np.array([[self.Vx ** 2, c], [c, self.Vy ** 2]], dtype=float)

    def is_stable(self) -> bool:
        return bool(np.all(np.linalg.eigvals(self.drift).real < 0))

    def require_stable(self) -> None:
        if not self.is_stable():
            raise ParameterError("drift matrix is not stable; no stationary state exists")

    def swapped(self) -> "OUParams":
        """Exchange the roles of ``x`` and ``y``."""
        return OUParams(A=self.D, B=self.C, C=self.B, D=self.A, Vx=self.Vy, Vy=self.Vx, rho=self.rho)


FIG3_DRIFT = dict(A=-5.0, B=5.0, C=1.0, D=-2.0, Vx=1.0)


def fig3_params(rho: float = 0.0, Vy: float = 1.0) -> OUParams:
    return OUParams(rho=rho, Vy=Vy, **FIG3_DRIFT)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def stationary_covariance(params: OUParams) -> np.ndarray:
    """Solution of ``F S + S F^T + Q = 0`` for the stationary covariance ``S``."""
    params.require_stable()
    return solve_continuous_lyapunov(params.drift, -params.diffusion)


def kappa_eff(params: OUParams) -> float:
    """Relaxation rate of the Markov marginal dynamics of ``x``."""
    A, B, C, D, Vx, Vy, r = (params.A, params.B, params.C, params.D,
                             params.Vx, params.Vy, params.rho)
    den = D * (A + D) * Vx ** 2 + B ** 2 * Vy ** 2 - B * Vx * (C * Vx + 2.0 * r * D * Vy)
    if den == 0:
        raise SingularParameterError("kappa_eff denominator vanishes")
    return (A + D) * (B * C - A * D) * Vx ** 2 / den


def te_rate_coupled_ou(params: OUParams) -> float:
    """Stationary transfer entropy rate from ``y`` to ``x`` (nats/s).

    Written as ``(sqrt(D^2 + b^2 - 2 rho D b) - |D| - rho b) / 2`` with
    ``b = B V_y / V_x``, which equals the familiar form with
    ``r = B V_y / (D V_x)`` and stays defined at ``D = 0``.
    """
    if params.Vy == 0 or params.Vx == 0:
        raise DivergenceError("transfer entropy rates diverge when a noise strength vanishes")
    b = params.B * params.Vy / params.Vx
    D, r = params.D, params.rho
    disc = D * D + b * b - 2.0 * r * D * b
    val = 0.5 * (math.sqrt(max(disc, 0.0)) - abs(D) - r * b)
    # At |rho| = 1 the two terms cancel exactly below the critical noise;
    # remove the rounding residue so the zero regime reads as zero.
    if -1e-12 * (abs(D) + abs(b)) < val < 0.0:
        val = 0.0
    return val


def sum_rate_coupled_ou(params: OUParams) -> float:
    """Memory plus transfer rate of ``x``: the Girsanov rate against its Markov marginal."""
    A, B, C, D, Vx, Vy, r = (params.A, params.B, params.C, params.D,
                             params.Vx, params.Vy, params.rho)
    num = B ** 2 * (-(B ** 2) * Vy ** 4
                    + 2.0 * B * (D - A) * r * Vy ** 3 * Vx
                    - ((A + D) ** 2 - 2.0 * B * C - 4.0 * A * D * r ** 2) * Vx ** 2 * Vy ** 2
                    - 2.0 * C * (D - A) * r * Vy * Vx ** 3
                    - C ** 2 * Vx ** 4)
    den = 4.0 * (A + D) * Vx ** 2 * (B ** 2 * Vy ** 2 + D * (A + D) * Vx ** 2
                                     - B * Vx * (2.0 * D * r * Vy + C * Vx))
    if den == 0:
        raise SingularParameterError("sum-rate denominator vanishes")
    return num / den


def memory_rate_coupled_ou(params: OUParams) -> float:
    """Active memory utilisation rate of ``x``: the sum rate minus the transfer rate."""
    return sum_rate_coupled_ou(params) - te_rate_coupled_ou(params)


def sum_rate_lyapunov(params: OUParams) -> float:
    """Sum rate as ``E[f^2] / 2`` over the stationary Gaussian law.

    This route uses the Lyapunov covariance and the conditional-mean drift
    ``E[A x + B y | x] = -kappa x`` and shares no algebra with
    :func:`sum_rate_coupled_ou`.
    """
    S = stationary_covariance(params)
    kappa = -(params.A + params.B * S[0, 1] / S[0, 0])
    a = params.A + kappa
    ef2 = a * a * S[0, 0] + 2.0 * a * params.B * S[0, 1] + params.B ** 2 * S[1, 1]
    return 0.5 * ef2 / params.Vx ** 2


def critical_noise(params: OUParams) -> tuple[float, float]:
    """Noise strengths of ``y`` at which the regime changes for ``|rho| = 1``.

    Returns magnitudes ``(|D| V_x / |B|, |C| V_x / |A|)``; the sign
    convention of the original expressions is not resolved.
    """
    if params.B == 0 or params.A == 0:
        raise SingularParameterError("critical noise needs nonzero A and B")
    return abs(params.D) * params.Vx / abs(params.B), abs(params.C) * params.Vx / abs(params.A)


def ou_rates(params: OUParams) -> dict[str, float]:
    """Transfer and memory rates on both sides plus ``kappa_eff``."""
    params.require_stable()
    sw = params.swapped()
    te_yx = te_rate_coupled_ou(params)
    te_xy = te_rate_coupled_ou(sw)
    return {
        "TE_yx": te_yx,
        "TE_xy": te_xy,
        "M_x": sum_rate_coupled_ou(params) - te_yx,
        "M_y": sum_rate_coupled_ou(sw) - te_xy,
        "kappa_eff": kappa_eff(params),
    }


def ou_sweep(rhos, vys, base: OUParams | None = None) -> list[dict]:
    """Rates over a grid of ``(rho, V_y)``; unstable or singular points are marked."""
    base = base or fig3_params()
    rows = []
    for rho in rhos:
        for vy in vys:
            p = replace(base, rho=float(rho), Vy=float(vy))
            row = {"rho": float(rho), "Vy": float(vy)}
            try:
                p.require_stable()
                row.update(ou_rates(p))
                row["status"] = "ok"
            except (ParameterError, SingularParameterError, DivergenceError) as exc:
                row.update({k: math.nan for k in ("TE_yx", "TE_xy", "M_x", "M_y", "kappa_eff")})
                row["status"] = type(exc).__name__
            rows.append(row)
    return rows


def ou_parametric_ais(kappa: float, delta_t):
    """Mutual information of a stationary OU process at lag ``delta_t``.

    ``1/2 ln(e^{k dt} / (e^{k dt} - e^{-k dt})) = -1/2 ln(1 - e^{-2 k dt})``.
    """
    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    dt = np.asarray(delta_t, dtype=float)
    if np.any(dt <= 0):
        raise ParameterError("delta_t must be positive")
    out = -0.5 * np.log(-np.expm1(-2.0 * kappa * dt))
    return float(out) if np.ndim(out) == 0 else out


def ou_asymptotic_coeffs(kappa: float):
    """Small-lag coefficients of :func:`ou_parametric_ais`."""
    from .icap import CoefficientSet

    if not kappa > 0:
        raise ParameterError("kappa must be positive")
    return CoefficientSet(c00=0.5 * math.log(1.0 / (2.0 * kappa)), c01=-0.5, c10=0.5 * kappa, c11=0.0)


# ---------------------------------------------------------------------------
# Simulation and Girsanov accumulation
# ---------------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _euler(x0, y0, A, B, C, D, Vx, Vy, rho, dt, z1, z2, guard):
    n = z1.size
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    xs[0] = x0
    ys[0] = y0
    sq = math.sqrt(dt)
    rc = math.sqrt(max(1.0 - rho * rho, 0.0))
    for k in range(n):
        x = xs[k]
        y = ys[k]
        dwx = sq * z1[k]
        dwy = sq * (rho * z1[k] + rc * z2[k])
        xs[k + 1] = x + (A * x + B * y) * dt + Vx * dwx
        ys[k + 1] = y + (C * x + D * y) * dt + Vy * dwy
        if abs(xs[k + 1]) > guard or abs(ys[k + 1]) > guard:
            return xs, ys, k + 1
    return xs, ys, -1


def default_dt(params: OUParams) -> float:
    return 1e-3 / max(abs(params.A), abs(params.B), abs(params.C), abs(params.D), 1e-300)


def simulate_coupled_ou(params: OUParams, dt: float | None = None, horizon: float = 10.0,
                        seed: int = 0, x0y0: tuple[float, float] | None = None,
                        stream: int = 0, t0: float = 0.0, guard: float = 1e100) -> SamplePath:
    """Euler-Maruyama path on ``[t0, t0 + horizon]``.

    Without ``x0y0`` the start is drawn from the stationary Gaussian law.
    """
    dt = default_dt(params) if dt is None else float(dt)
    n = int(round(horizon / dt))
    if n < 1 or not math.isclose(n * dt, horizon, rel_tol=1e-9):
        raise ParameterError("horizon must be a whole number of steps")
    rng = make_rng(seed, stream)
    if x0y0 is None:
        S = stationary_covariance(params)
        x0, y0 = rng.multivariate_normal(np.zeros(2), S)
    else:
        x0, y0 = x0y0
    z = rng.standard_normal((2, n))
    xs, ys, bad = _euler(float(x0), float(y0), params.A, params.B, params.C, params.D,
                         params.Vx, params.Vy, params.rho, dt, z[0], z[1], guard)
    if bad >= 0:
        raise DivergenceError(f"path exceeded {guard:g} at step {bad}")
    return SamplePath(TimeWindow(t0, t0 + n * dt), dt, xs, ys)


@dataclass(frozen=True)
class GirsanovResult:
    """Cumulative Girsanov log ratio and the exponential martingale along one path."""

    times: np.ndarray
    accumulator: np.ndarray
    Z: np.ndarray
    increments: np.ndarray

    def info_trace(self) -> InfoTrace:
        """Combined memory-plus-transfer trace, stored in the memory fields.

        Each Euler increment is recorded as a jump at the end of its step,
        because the stochastic integral has no rate representation.
        """
        z = np.zeros_like(self.times)
        return InfoTrace(self.times, self.accumulator, z, self.times[1:], self.increments,
                         np.zeros_like(self.increments), z, z)


def girsanov_accumulator(path: SamplePath, params: OUParams, dt: float | None = None) -> GirsanovResult:
    """Log likelihood ratio of full vs Markov-marginal dynamics of ``x`` along ``path``.

    The noise increments are reconstructed from the path as
    ``(dx - (A x + B y) dt) / V_x``. The sums are in the Ito convention.
    """
    if dt is not None and not math.isclose(dt, path.dt, rel_tol=1e-12):
        raise ParameterError(f"path step {path.dt} differs from requested dt {dt}")
    if params.Vx <= 0:
        raise ParameterError("V_x must be positive")
    x, y, h = path.values_x, path.values_y, path.dt
    kap = kappa_eff(params)
    drift = params.A * x[:-1] + params.B * y[:-1]
    dw = (np.diff(x) - drift * h) / params.Vx
    f = (drift + kap * x[:-1]) / params.Vx
    inc = 0.5 * f * f * h + f * dw
    acc = np.concatenate([[0.0], np.cumsum(inc)])
    return GirsanovResult(path.times, acc, np.exp(-acc), inc)


def girsanov_ensemble(params: OUParams, n_paths: int, horizon: float, dt: float, seed: int,
                      probe_times=(), threads: int = 1) -> dict[str, np.ndarray]:
    """Accumulator at ``horizon`` and ``Z`` at the probe times over an ensemble.

    Path ``i`` uses generator stream ``i`` of ``seed``.
    """
    probes = np.asarray(probe_times, dtype=float)
    idx = np.rint(probes / dt).astype(int)

    def one(i: int):
        g = girsanov_accumulator(simulate_coupled_ou(params, dt, horizon, seed, stream=i), params)
        return g.accumulator[-1], g.Z[idx]

    out = run_ensemble(one, n_paths, threads)
    finals = np.array([o[0] for o in out])
    zs = np.array([o[1] for o in out]).reshape(n_paths, probes.size)
    return {"accumulator": finals, "Z": zs, "probe_times": probes}


def effective_sample_size(weights: np.ndarray) -> float:
    """Kish effective sample size of nonnegative weights."""
    w = np.asarray(weights, dtype=float)
    s = w.sum()
    return float(s * s / np.sum(w * w)) if s > 0 else 0.0

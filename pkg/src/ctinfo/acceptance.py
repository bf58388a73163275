"""Release-gate checks with fixed seeds, targets and tolerances.

Each criterion returns a :class:`CriterionResult` holding one or more
:class:`Check` records and its wall-clock runtime. A global tolerance
scale can be applied when judging the checks; runtime budgets are not
scaled.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from decimal import Decimal, getcontext
from fractions import Fraction
from typing import Callable

import numpy as np

from .closedform import (event_driven_overestimate, event_driven_ring_rate,
                         event_driven_stationary_rate, refractory_closed_forms,
                         refractory_memory_rate, xi_integral)
from .filtering import run_coupled_filter
from .icap import fit_asymptotic_coeffs, parametric_ix_two_state, sample_grid, two_state_coeffs
from .infomeasures import (binned_storage_estimate, ergodic_memory_rate, pathwise_memory,
                           pathwise_transfer)
from .intensities import (coupled_conditional_trace, coupled_markov_curve, coupled_markov_rate,
                          coupled_markov_trace, event_driven_traces, refractory_intensity_trace)
from .oudyn import (fig3_params, girsanov_ensemble, effective_sample_size, kappa_eff,
                    ou_asymptotic_coeffs, ou_parametric_ais, ou_sweep, sum_rate_coupled_ou,
                    te_rate_coupled_ou)
from .paths import IntensityTrace, TimeWindow
from .simulate import (FIG2_PARAMS, EventDrivenParams, PhaseDistribution, RefractoryParams,
                       make_rng, run_ensemble, simulate_coupled_spiking, simulate_event_driven,
                       simulate_refractory)

DEFAULT_SEED = 20240601


@dataclass(frozen=True)
class Check:
    """One comparison.

    ``mode`` is ``'abs'`` (``|measured - target| <= tol``), ``'rel'``
    (``|measured - target| <= tol |target|``) or ``'max'``
    (``measured <= target + tol``).
    """

    name: str
    measured: float
    target: float
    tolerance: float
    mode: str = "abs"

    def diff(self) -> float:
        if self.mode == "max":
            return self.measured - self.target
        d = abs(self.measured - self.target)
        return d / abs(self.target) if self.mode == "rel" else d

    def passed(self, scale: float = 1.0) -> bool:
        if not math.isfinite(self.measured):
            return False
        return self.diff() <= self.tolerance * scale

    def as_dict(self, scale: float = 1.0) -> dict:
        return {"name": self.name, "measured": self.measured, "target": self.target,
                "tolerance": self.tolerance * scale, "mode": self.mode, "diff": self.diff(),
                "status": "pass" if self.passed(scale) else "fail"}


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check]
    runtime: float
    budget: float
    details: dict = field(default_factory=dict)

    def passed(self, scale: float = 1.0) -> bool:
        return all(c.passed(scale) for c in self.checks) and self.runtime <= self.budget

    def as_dict(self, scale: float = 1.0) -> dict:
        return {"criterion": self.number, "title": self.title,
                "status": "pass" if self.passed(scale) else "fail",
                "runtime_s": self.runtime, "budget_s": self.budget,
                "checks": [c.as_dict(scale) for c in self.checks], "details": self.details}

    def summary_line(self, scale: float = 1.0) -> str:
        status = "PASS" if self.passed(scale) else "FAIL"
        parts = []
        for c in self.checks:
            mark = "" if c.passed(scale) else " (!)"
            parts.append(f"{c.name}={c.measured:.6g} vs {c.target:.6g}{mark}")
        return (f"[{status}] criterion {self.number:2d} {self.title}: " + "; ".join(parts)
                + f"; runtime {self.runtime:.1f}s/{self.budget:.0f}s")


def _timed(number: int, title: str, budget: float):
    def wrap(fn: Callable[..., tuple[list[Check], dict]]):
        def run(seed: int = DEFAULT_SEED, threads: int = 1) -> CriterionResult:
            t0 = time.perf_counter()
            checks, details = fn(seed, threads)
            return CriterionResult(number, title, checks, time.perf_counter() - t0, budget, details)
        run.__doc__ = fn.__doc__
        run.number = number
        return run
    return wrap


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def exact_ou_oracle(A, B, C, D, Vx, Vy, rho=0) -> dict[str, Fraction]:
    """``kappa_eff`` and the sum rate in exact rational arithmetic.

    The stationary covariance solves the 3x3 linear Lyapunov system by
    Cramer's rule over :class:`fractions.Fraction`.
    """
    A, B, C, D, Vx, Vy, rho = (Fraction(v) for v in (A, B, C, D, Vx, Vy, rho))
    M = [[2 * A, 2 * B, Fraction(0)],
         [C, A + D, B],
         [Fraction(0), 2 * C, 2 * D]]
    rhs = [-Vx * Vx, -rho * Vx * Vy, -Vy * Vy]

    def det3(m):
        return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))

    d = det3(M)
    sol = []
    for col in range(3):
        Mc = [row[:] for row in M]
        for r in range(3):
            Mc[r][col] = rhs[r]
        sol.append(det3(Mc) / d)
    sxx, sxy, syy = sol
    kappa = -(A + B * sxy / sxx)
    a = A + kappa
    ef2 = a * a * sxx + 2 * a * B * sxy + B * B * syy
    return {"kappa_eff": kappa, "sum_rate": ef2 / (2 * Vx * Vx), "Sxx": sxx, "Sxy": sxy, "Syy": syy}


def riccati_te_oracle(B, D, Vx, Vy, digits: int = 50) -> Decimal:
    """Transfer entropy rate for ``rho = 0`` from the Kalman-Bucy filter, in high precision.

    The steady posterior variance ``P`` of ``y`` given the past of ``x``
    solves ``(B/Vx)^2 P^2 - 2 D P - Vy^2 = 0``; the rate is
    ``B^2 P / (2 Vx^2)``.
    """
    getcontext().prec = digits
    B, D, Vx, Vy = (Decimal(str(v)) for v in (B, D, Vx, Vy))
    a = (B / Vx) ** 2
    P = (2 * D + (4 * D * D + 4 * a * Vy * Vy).sqrt()) / (2 * a)
    return a * P / 2


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------

LN2_HALF = math.log(2.0) / 2.0


@_timed(1, "refractory memory rate", 10.0)
def criterion_1(seed: int, threads: int):
    """Ergodic memory rate of the refractory process against ln(2)/2."""
    p = RefractoryParams(1.0, 1.0)
    x = simulate_refractory(p, TimeWindow(0.0, 1e5), seed, stream=1)
    lam0 = IntensityTrace.constant(refractory_closed_forms(1.0, 1.0)["lambda0"], x.window)
    est = ergodic_memory_rate(x, refractory_intensity_trace(x, p), lam0, burn_in=1e3)
    return [Check("M_rate", est.value, LN2_HALF, 0.02, "rel")], est.as_dict()


@_timed(2, "refractory optimum", 30.0)
def criterion_2(seed: int, threads: int):
    """Closed-form sweep of the refractory period plus one simulated point."""
    grid = np.linspace(0.1, 4.0, 40)
    step = grid[1] - grid[0]
    rates = refractory_memory_rate(1.0, grid)
    argmax = float(grid[np.argmax(rates)])
    opt = math.e - 1.0
    analytic_max = float(refractory_memory_rate(1.0, opt))
    p = RefractoryParams(1.0, opt)
    x = simulate_refractory(p, TimeWindow(0.0, 1e5), seed, stream=2)
    lam0 = IntensityTrace.constant(refractory_closed_forms(1.0, opt)["lambda0"], x.window)
    est = ergodic_memory_rate(x, refractory_intensity_trace(x, p), lam0, burn_in=1e3)
    checks = [Check("argmax", argmax, opt, step, "abs"),
              Check("analytic_max", analytic_max, 1.0 / math.e, 1e-12, "abs"),
              Check("simulated_max", est.value, 1.0 / math.e, 0.02, "rel")]
    return checks, {"grid_max": float(rates.max()), "simulated": est.as_dict()}


@_timed(3, "event-driven rates", 20.0)
def criterion_3(seed: int, threads: int):
    """Phase-known ergodic memory rate and the stationarity over-estimate identity."""
    c, dx, dy = 0.5, 0.1, 1.0
    p = EventDrivenParams(c, dx, dy)
    x, _, phase = simulate_event_driven(p, TimeWindow(0.0, 1e5), seed, stream=3)
    full, markov = event_driven_traces(x, p, phase)
    est = ergodic_memory_rate(x, full, markov, burn_in=10 * dy)
    ring = event_driven_ring_rate(c, dy)
    st = event_driven_stationary_rate(c, dx, dy)
    over = event_driven_overestimate(c, dx, dy)
    checks = [Check("M_ring_sim", est.value, 0.153426, 0.02, "rel"),
              Check("identity", st - ring, c / dy * math.log(dy / dx), 1e-12, "abs"),
              Check("overestimate", over, 1.151293, 5e-7, "abs")]
    return checks, {"simulated": est.as_dict(), "M_ring": ring, "M_st": st, "phase": phase}


@_timed(4, "xi bounds", 10.0)
def criterion_4(seed: int, threads: int):
    """Bounds on xi for random tabulated phase densities and its two endpoints."""
    c, dx, dy = 0.5, 0.1, 1.0
    over = event_driven_overestimate(c, dx, dy)
    rng = make_rng(seed, 4)
    values = []
    for _ in range(20):
        n = int(rng.integers(8, 200))
        dens = rng.gamma(float(rng.uniform(0.2, 3.0)), size=n)
        values.append(xi_integral(EventDrivenParams(c, dx, dy, PhaseDistribution.tabulated(dens))))
    values = np.array(values)
    slack = 1e-12
    violations = int(np.sum((values < -over - slack) | (values > slack)))
    xi_delta = xi_integral(EventDrivenParams(c, dx, dy, PhaseDistribution.delta(0.3)))
    xi_uniform = xi_integral(EventDrivenParams(c, dx, dy, PhaseDistribution.uniform()))
    xi_flat_table = xi_integral(EventDrivenParams(c, dx, dy, PhaseDistribution.tabulated(np.ones(50))))
    checks = [Check("bound_violations", violations, 0, 0, "abs"),
              Check("xi_delta", xi_delta, 0.0, 1e-4, "abs"),
              Check("xi_uniform", xi_uniform, -over, 1e-4, "abs"),
              Check("xi_flat_tabulated", xi_flat_table, -over, 1e-4, "abs")]
    return checks, {"xi_min": float(values.min()), "xi_max": float(values.max()), "lower": -over}


@_timed(5, "coupled-spiking mean rate", 120.0)
def criterion_5(seed: int, threads: int):
    """Empirical rate and the long-run filter average against the quoted mean Markov rate."""
    p = FIG2_PARAMS
    horizon, burn = 1e6, 10.0
    x, _ = simulate_coupled_spiking(p, TimeWindow(0.0, horizon), seed, stream=5)
    ev = x.events
    emp = float(np.sum(ev >= burn) / (horizon - burn))
    run = run_coupled_filter(x, p, grid_step=1e-2, initial="empty", record=False, burn_in=burn)
    checks = [Check("empirical_rate", emp, 1.2697, 0.01, "rel"),
              Check("filter_average", run.mean_intensity, 1.2697, 0.01, "rel")]
    return checks, {"quadrature_lambda0": coupled_markov_rate(p), "filter_step": run.h,
                    "n_events": int(ev.size)}


@_timed(6, "zero-mean waiting contribution", 120.0)
def criterion_6(seed: int, threads: int):
    """Ensemble mean of lambda0(t) - lambda_X(t) at fixed probe times."""
    p = FIG2_PARAMS
    horizon, h, n_paths = 5.0, 1e-3, 500
    probes = np.linspace(0.5, 5.0, 10)
    lam0 = coupled_markov_curve(p, probes)
    idx = np.rint(probes / h).astype(int)

    def one(i: int) -> np.ndarray:
        x, _ = simulate_coupled_spiking(p, TimeWindow(0.0, horizon), seed, stream=600 + i)
        run = run_coupled_filter(x, p, grid_step=h, initial="empty", record=True)
        return lam0 - run.node_values[idx]

    vals = np.array(run_ensemble(one, n_paths, threads))
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(n_paths)
    z = np.abs(mean) / se
    return ([Check("max_abs_z", float(z.max()), 0.0, 3.0, "abs")],
            {"probes": probes, "mean": mean, "stderr": se})


@_timed(7, "measure chain rule", 60.0)
def criterion_7(seed: int, threads: int):
    """Per-path chain rule of the memory and transfer functionals."""
    p = FIG2_PARAMS
    window = TimeWindow(0.0, 20.0)
    h = 1e-3
    markov = coupled_markov_trace(p, window, h)

    def one(i: int) -> float:
        x, y = simulate_coupled_spiking(p, window, seed, stream=700 + i)
        cond = coupled_conditional_trace(x, y, p, h)
        full = run_coupled_filter(x, p, grid_step=h).trace()
        lhs = pathwise_memory(x, cond, markov).total_M
        rhs = pathwise_memory(x, full, markov).total_M + pathwise_transfer(x, cond, full).total_T
        return abs(lhs - rhs)

    diffs = np.array(run_ensemble(one, 50, threads))
    return [Check("max_abs_diff", float(diffs.max()), 0.0, 1e-6, "abs")], {"mean_abs_diff": float(diffs.mean())}


@_timed(8, "OU closed forms", 1.0)
def criterion_8(seed: int, threads: int):
    """Closed forms at the reference drift, against rational and high-precision oracles."""
    p = fig3_params(0.0, 1.0)
    exact = exact_ou_oracle(p.A, p.B, p.C, p.D, p.Vx, p.Vy, p.rho)
    te_oracle = float(riccati_te_oracle(p.B, p.D, p.Vx, p.Vy))
    te = te_rate_coupled_ou(p)
    checks = [Check("TE_yx", te, 1.6926, 1e-4, "abs"),
              Check("TE_yx_vs_riccati", te, te_oracle, 1e-12, "abs"),
              Check("kappa_eff", kappa_eff(p), float(Fraction(35, 34)), 1e-12, "abs"),
              Check("kappa_eff_vs_oracle", kappa_eff(p), float(exact["kappa_eff"]), 1e-12, "abs"),
              Check("sum_rate", sum_rate_coupled_ou(p), float(exact["sum_rate"]), 1e-12, "abs")]
    # The quoted target 16625/952 disagrees with both independent routes by
    # a factor of about ten; it is reported here and not used as the target.
    quoted = Fraction(16625, 952)
    return checks, {"kappa_eff_exact": str(exact["kappa_eff"]), "sum_rate_exact": str(exact["sum_rate"]),
                    "TE_riccati": te_oracle, "sum_rate_quoted": "16625/952",
                    "sum_rate_minus_quoted": float(exact["sum_rate"] - quoted)}


@_timed(9, "Girsanov Monte Carlo", 180.0)
def criterion_9(seed: int, threads: int):
    """Ensemble mean accumulator rate and the exponential martingale at modest times."""
    p = fig3_params(0.0, 1.0)
    horizon = 50.0
    probes = np.array([0.5, 1.0, 2.0, 3.0, 4.0, 5.0])
    ens = girsanov_ensemble(p, 200, horizon, 1e-3, seed, probe_times=probes, threads=threads)
    target = sum_rate_coupled_ou(p)
    rate = float(ens["accumulator"].mean() / horizon)
    Z = ens["Z"]
    zmean = Z.mean(axis=0)
    zse = Z.std(axis=0, ddof=1) / math.sqrt(Z.shape[0])
    zscore = np.abs(zmean - 1.0) / zse
    ess = np.array([effective_sample_size(Z[:, k]) for k in range(probes.size)])
    checks = [Check("mean_rate", rate, target, 0.03, "rel"),
              Check("martingale_max_z", float(zscore.max()), 0.0, 3.0, "abs")]
    return checks, {"probe_times": probes, "Z_mean": zmean, "Z_stderr": zse, "z_scores": zscore,
                    "effective_sample_size": ess,
                    "rate_stderr": float(ens["accumulator"].std(ddof=1) / math.sqrt(200) / horizon)}


@_timed(10, "regime boundaries", 10.0)
def criterion_10(seed: int, threads: int):
    """Onset of transfer and the memory-rate cusp at perfectly anti-correlated noise."""
    vys = np.round(np.linspace(0.001, 1.0, 1000), 12)
    step = float(vys[1] - vys[0])
    rows = ou_sweep([-1.0], vys)
    te_yx = np.array([r["TE_yx"] for r in rows])
    te_xy = np.array([r["TE_xy"] for r in rows])
    m_x = np.array([r["M_x"] for r in rows])
    tiny = 1e-9
    on_yx = float(vys[np.argmax(te_yx > tiny)])
    # Transfer y <- x is positive below its boundary and zero above it.
    off_xy = float(vys[np.argmax(te_xy <= tiny)])
    k = int(np.argmax(m_x))
    slope_left = (m_x[k] - m_x[k - 1]) / step
    slope_right = (m_x[k + 1] - m_x[k]) / step
    cusp = bool(np.isfinite(m_x[k]) and slope_left > 0 > slope_right
                and abs(slope_left) < 1e3 and abs(slope_right) < 1e3)
    plus = ou_sweep([1.0], vys)
    checks = [Check("TE_yx_onset", on_yx, 0.4, step + 1e-12, "abs"),
              Check("TE_xy_boundary", off_xy, 0.2, step + 1e-12, "abs"),
              Check("M_x_peak_location", float(vys[k]), 0.4, step + 1e-12, "abs"),
              Check("M_x_finite_cusp", float(cusp), 1.0, 0.0, "abs")]
    return checks, {"M_x_peak": float(m_x[k]), "slopes": [slope_left, slope_right],
                    "max_TE_at_rho_plus_1": float(max(max(r["TE_yx"], r["TE_xy"]) for r in plus))}


@_timed(11, "asymptotic coefficient recovery", 5.0)
def criterion_11(seed: int, threads: int):
    """Weighted fits over lags 1e-5 to 1e-3 for the two-state and OU processes."""
    checks = []
    details = {}
    cases = [("two_state", lambda d: parametric_ix_two_state(1.0, 2.0, d), two_state_coeffs(1.0, 2.0), 1e-3),
             ("ou", lambda d: ou_parametric_ais(1.0, d), ou_asymptotic_coeffs(1.0), 1e-2)]
    for name, f, truth, tol in cases:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fit = fit_asymptotic_coeffs(sample_grid(f, 1e-5, 1e-3, 40))
        scale = max(abs(truth.c00), abs(truth.c01), abs(truth.c10), abs(truth.c11))
        for coef in ("c00", "c01", "c10", "c11"):
            t = getattr(truth, coef)
            if t == 0.0:
                checks.append(Check(f"{name}_{coef}", getattr(fit, coef), 0.0, tol * scale, "abs"))
            else:
                checks.append(Check(f"{name}_{coef}", getattr(fit, coef), t, tol, "rel"))
        details[name] = {"fit": fit.as_dict(), "warnings": [str(w.message) for w in caught]}
    return checks, details


@_timed(12, "binned caution", 180.0)
def criterion_12(seed: int, threads: int):
    """Naive binned storage estimates with a fixed two-second history span."""
    p = RefractoryParams(1.0, 1.0)
    x = simulate_refractory(p, TimeWindow(0.0, 1e6), seed, stream=12)
    dts = [0.2, 0.1, 0.05, 0.02]
    est = [binned_storage_estimate(x, dt, int(round(2.0 / dt))) for dt in dts]
    errs = np.abs(np.array(est) - LN2_HALF)
    monotone = bool(np.all(np.diff(errs) < 0))
    checks = [Check("smallest_dt_estimate", est[-1], 0.3466, 0.10, "rel"),
              Check("monotone_approach", float(monotone), 1.0, 0.0, "abs")]
    return checks, {"dt": dts, "estimates": est}


CRITERIA = {fn.number: fn for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                                     criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
                                     criterion_11, criterion_12)}


def run_criteria(numbers=None, seed: int = DEFAULT_SEED, threads: int = 1,
                 echo: Callable[[str], None] | None = None, scale: float = 1.0) -> list[CriterionResult]:
    """Run the selected criteria (all by default) in order."""
    out = []
    for n in sorted(numbers or CRITERIA):
        if n not in CRITERIA:
            raise KeyError(f"no criterion {n}")
        res = CRITERIA[n](seed, threads)
        if echo is not None:
            echo(res.summary_line(scale))
        out.append(res)
    return out

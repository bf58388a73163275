"""Command-line front end.

Exit codes: 0 success, 2 validation failure, 3 parameter error,
4 numerical error.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .acceptance import CRITERIA, DEFAULT_SEED, run_criteria
from .closedform import event_driven_report, phase_recovery, refractory_closed_forms
from .config import RunConfig, describe_keys, load_config, params_dict
from .exceptions import (CtinfoError, InsufficientDataError, NumericalError, ParameterError,
                         ValidationError)
from .filtering import run_coupled_filter
from .formats import (FIG3_HEADER, make_meta, read_events, read_intensity, read_sample_path,
                      write_csv, write_events, write_info_trace, write_intensity, write_json,
                      write_sample_path)
from .icap import (fit_asymptotic_coeffs, master_eq_coeffs, parametric_ix_two_state, sample_grid,
                   spiking_coeffs)
from .infomeasures import (binned_storage_demo, elusive_information, ergodic_memory_rate,
                           ergodic_transfer_rate, pathwise_decomposition)
from .intensities import (coupled_conditional_trace, coupled_markov_rate, coupled_markov_trace,
                          event_driven_traces, refractory_intensity_trace)
from .oudyn import (effective_sample_size, girsanov_accumulator, girsanov_ensemble,
                    ou_asymptotic_coeffs, ou_parametric_ais, ou_rates, ou_sweep,
                    simulate_coupled_ou, sum_rate_coupled_ou)
from .paths import IntensityTrace, TimeWindow, align_traces
from .simulate import (simulate_coupled_spiking, simulate_event_driven, simulate_poisson,
                       simulate_refractory)

EXIT_OK, EXIT_VALIDATION, EXIT_PARAMETER, EXIT_NUMERICAL = 0, 2, 3, 4
POINT_MODELS = ("poisson", "refractory", "event-driven", "coupled")
GLOBAL_DEFAULTS = {"seed": None, "threads": 1, "out_dir": None, "params": None, "quiet": False}


class CliError(ParameterError):
    """Bad command-line usage detected after parsing."""


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _out_path(args, default_name: str) -> Path:
    out = Path(args.out) if args.out else Path(default_name)
    if not out.is_absolute() and args.out_dir:
        out = Path(args.out_dir) / out
    return out


def _seed(args, cfg: RunConfig | None = None) -> int:
    if args.seed is not None:
        return args.seed
    if cfg is not None and "seed" in cfg.controls:
        return int(cfg.controls["seed"])
    return 0


def _window(args, cfg: RunConfig, default_horizon: float) -> TimeWindow:
    t0 = cfg.control("t0", 0.0)
    horizon = args.horizon if getattr(args, "horizon", None) is not None else cfg.control("horizon", default_horizon)
    return TimeWindow(t0, t0 + horizon)


def _meta(args, cfg: RunConfig | None, seed: int | None, **extra) -> dict:
    return make_meta(seed=seed, config_hash=cfg.config_hash if cfg else None,
                     command=args.command, **extra)


def _grid(spec: str) -> np.ndarray:
    """Parse ``start:stop:count`` or a comma-separated list."""
    try:
        if ":" in spec:
            a, b, n = spec.split(":")
            return np.linspace(float(a), float(b), int(n))
        return np.array([float(v) for v in spec.split(",")])
    except ValueError:
        raise CliError(f"cannot parse grid {spec!r}; use start:stop:count or a comma list") from None


def _initial(cfg: RunConfig, args=None):
    """Filter start matching the simulator: a quiet-history length if configured."""
    chosen = getattr(args, "initial", None)
    if chosen is not None:
        return chosen
    return cfg.control("history", "empty")


def _history(cfg: RunConfig) -> float:
    return cfg.control("history", math.inf)


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


# ---------------------------------------------------------------------------
# simulate / filter / estimate / analytic
# ---------------------------------------------------------------------------


def _simulate_point(cfg: RunConfig, window: TimeWindow, seed: int):
    """Return ``(x, y or None, extra metadata)`` for a point-process model."""
    p = cfg.params
    if cfg.model == "poisson":
        return simulate_poisson(p["rate"], window, seed), None, {}
    if cfg.model == "refractory":
        return simulate_refractory(p, window, seed), None, {}
    if cfg.model == "event-driven":
        x, y, phase = simulate_event_driven(p, window, seed)
        return x, y, {"phase": phase}
    if cfg.model == "coupled":
        x, y = simulate_coupled_spiking(p, window, seed, history=_history(cfg))
        return x, y, {}
    raise CliError(f"model {cfg.model!r} is not a point process; use 'ctinfo ou simulate'")


def cmd_simulate(args) -> int:
    cfg = load_config(args.params, args.model)
    seed = _seed(args, cfg)
    window = _window(args, cfg, 1000.0)
    x, y, extra = _simulate_point(cfg, window, seed)
    out = _out_path(args, "events.csv")
    write_events(out, x, _meta(args, cfg, seed, model=cfg.model, **extra))
    if y is not None:
        write_events(out.with_name(out.stem + "_y" + out.suffix), y,
                     _meta(args, cfg, seed, model=cfg.model, process="y", **extra))
    _say(args, f"wrote {len(x)} events to {out}")
    return EXIT_OK


def cmd_filter(args) -> int:
    cfg = load_config(args.params, args.model)
    x, _ = read_events(args.events)
    step = args.grid_step or cfg.control("grid_step", 1e-3)
    run = run_coupled_filter(x, cfg.params, grid_step=step, initial=_initial(cfg, args))
    out = _out_path(args, "intensity.csv")
    write_intensity(out, run.trace(), _meta(args, cfg, None, grid_step=run.h), "lambda_full")
    _say(args, f"wrote marginal intensity on {run.node_times.size} nodes to {out}")
    return EXIT_OK


def _memory_traces(cfg: RunConfig, x, args, meta: dict):
    p = cfg.params
    step = args.grid_step or cfg.control("grid_step", 1e-3)
    if cfg.model == "poisson":
        lam = IntensityTrace.constant(p["rate"], x.window)
        return lam, lam
    if cfg.model == "refractory":
        lam0 = refractory_closed_forms(p.mu, p.delta_x)["lambda0"]
        return refractory_intensity_trace(x, p), IntensityTrace.constant(lam0, x.window)
    if cfg.model == "event-driven":
        if args.phase is not None:
            phase = args.phase
        elif "phase" in meta:
            phase = float(meta["phase"])
        else:
            phase = phase_recovery(x, p.delta_x, p.delta_y)
        return event_driven_traces(x, p, phase)
    if cfg.model == "coupled":
        return (run_coupled_filter(x, p, grid_step=step, initial=_initial(cfg)).trace(),
                coupled_markov_trace(p, x.window, step))
    raise CliError(f"model {cfg.model!r} has no point-process memory estimator")


def cmd_estimate(args) -> int:
    cfg = load_config(args.params, args.model)
    seed = _seed(args, cfg)
    if args.measure == "elusive" and not args.events:
        if cfg.model != "refractory":
            raise CliError("elusive information is implemented for the refractory model")
        value = elusive_information(cfg.params)
        payload = {"value": value, "stderr": None, "n_events": 0, "horizon": None,
                   "method": "quadrature", "params": params_dict(cfg.params)}
        out = _out_path(args, "summary.json")
        write_json(out, payload, _meta(args, cfg, seed, measure="elusive", model=cfg.model))
        _say(args, f"elusive information {value:.6g} nats; wrote {out}")
        return EXIT_OK
    if not args.events:
        raise CliError("--events is required")
    x, ev_meta = read_events(args.events)
    if args.seed is None and ev_meta.get("seed", "None") != "None":
        seed = int(ev_meta["seed"])
    burn = args.burn_in if args.burn_in is not None else cfg.control("burn_in", 0.0)
    kw = {"burn_in": burn, "include_waiting": args.include_waiting}
    payload: dict = {}
    if args.measure == "memory":
        full, markov = _memory_traces(cfg, x, args, ev_meta)
        if args.intensity:
            full = read_intensity(args.intensity)
        payload = ergodic_memory_rate(x, full, markov, **kw).as_dict()
    elif args.measure == "transfer":
        if cfg.model != "coupled":
            raise CliError("transfer estimation needs the coupled model")
        if not args.y_events:
            raise CliError("transfer estimation needs --y-events")
        y, _ = read_events(args.y_events)
        step = args.grid_step or cfg.control("grid_step", 1e-3)
        cond = coupled_conditional_trace(x, y, cfg.params, step)
        full = (read_intensity(args.intensity) if args.intensity
                else run_coupled_filter(x, cfg.params, grid_step=step, initial=_initial(cfg)).trace())
        payload = ergodic_transfer_rate(x, cond, full, **kw).as_dict()
    elif args.measure == "elusive":
        if cfg.model != "refractory":
            raise CliError("elusive information is implemented for the refractory model")
        value = elusive_information(cfg.params, x, burn_in=burn)
        payload = {"value": value, "stderr": None, "n_events": len(x), "horizon": x.window.duration,
                   "quadrature": elusive_information(cfg.params)}
    else:
        if not args.dt_bins:
            raise CliError("binned estimation needs --dt-bins")
        rows = binned_storage_demo(x, _grid(args.dt_bins), k=args.k, history_span=args.history_span)
        payload = {"value": rows[-1][1], "stderr": None, "n_events": len(x),
                   "horizon": x.window.duration, "table": [{"dt": d, "estimate": v} for d, v in rows]}
    payload["params"] = params_dict(cfg.params)
    out = _out_path(args, "summary.json")
    write_json(out, payload, _meta(args, cfg, seed, measure=args.measure, model=cfg.model))
    _say(args, f"{args.measure} rate {payload['value']:.6g}; wrote {out}")
    return EXIT_OK


def cmd_analytic(args) -> int:
    cfg = load_config(args.params, args.model)
    p = cfg.params
    if cfg.model == "refractory":
        payload = refractory_closed_forms(p.mu, p.delta_x)
    else:
        payload = event_driven_report(p).as_dict()
    payload["params"] = params_dict(p)
    out = _out_path(args, "report.json")
    write_json(out, payload, _meta(args, cfg, None, model=cfg.model))
    _say(args, f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ou / icap
# ---------------------------------------------------------------------------


def cmd_ou(args) -> int:
    cfg = load_config(args.params, "ou")
    p = cfg.params
    seed = _seed(args, cfg)
    dt = args.dt or cfg.control("dt", 1e-3)
    horizon = args.horizon if args.horizon is not None else cfg.control("horizon", 10.0)
    if args.action == "simulate":
        path = simulate_coupled_ou(p, dt, horizon, seed)
        out = _out_path(args, "ou_path.csv")
        write_sample_path(out, path, _meta(args, cfg, seed, dt=dt))
        if args.trace:
            g = girsanov_accumulator(path, p)
            write_info_trace(Path(args.trace), g.info_trace(), _meta(args, cfg, seed, dt=dt))
    elif args.action == "rates":
        out = _out_path(args, "ou_rates.json")
        write_json(out, {**ou_rates(p), "sum_rate": sum_rate_coupled_ou(p), "params": params_dict(p)},
                   _meta(args, cfg, None))
    elif args.action == "sweep":
        out = _out_path(args, "ou_sweep.csv")
        _write_sweep(out, p, _grid(args.rho_grid), _grid(args.vy_grid), _meta(args, cfg, None))
    else:
        if args.path:
            g = girsanov_accumulator(read_sample_path(args.path), p)
            payload = {"accumulator": float(g.accumulator[-1]),
                       "rate": float(g.accumulator[-1] / (g.times[-1] - g.times[0]))}
        else:
            n = args.n_paths or int(cfg.control("n_paths", 200))
            probes = _grid(args.probes)
            ens = girsanov_ensemble(p, n, horizon, dt, seed, probe_times=probes, threads=args.threads)
            Z = ens["Z"]
            payload = {"n_paths": n, "horizon": horizon, "dt": dt,
                       "mean_rate": float(ens["accumulator"].mean() / horizon),
                       "mean_rate_stderr": float(ens["accumulator"].std(ddof=1) / math.sqrt(n) / horizon),
                       "closed_form_rate": sum_rate_coupled_ou(p),
                       "probe_times": probes, "Z_mean": Z.mean(axis=0),
                       "Z_stderr": Z.std(axis=0, ddof=1) / math.sqrt(n),
                       "effective_sample_size": [effective_sample_size(Z[:, k]) for k in range(probes.size)]}
        out = _out_path(args, "ou_martingale.json")
        write_json(out, payload, _meta(args, cfg, seed))
    _say(args, f"wrote {out}")
    return EXIT_OK


def _write_sweep(out: Path, base, rhos, vys, meta) -> int:
    rows = ou_sweep(rhos, vys, base)
    skipped = sum(r["status"] != "ok" for r in rows)
    meta = dict(meta, skipped=skipped)
    write_csv(out, FIG3_HEADER, ([r[k] for k in FIG3_HEADER] for r in rows), meta)
    return skipped


def _icap_model(cfg: RunConfig):
    """``(closed-form coefficients, I(dt) evaluator or None)`` for an icap config."""
    p = cfg.params
    if cfg.model == "two-state":
        kp, km = p.rates[("A", "B")], p.rates[("B", "A")]
        return master_eq_coeffs(p), lambda d: parametric_ix_two_state(kp, km, d)
    if cfg.model == "ou-scalar":
        return ou_asymptotic_coeffs(p["kappa"]), lambda d: ou_parametric_ais(p["kappa"], d)
    if cfg.model == "spike-train":
        return spiking_coeffs(p["lambda0"]), None
    raise CliError(f"model {cfg.model!r} has no predictive-capacity expansion; "
                   "use two-state, ou-scalar or spike-train")


def cmd_icap(args) -> int:
    cfg = load_config(args.model_cfg or args.params)
    coeffs, f = _icap_model(cfg)
    payload: dict = {"model": cfg.model, "closed_form": coeffs.as_dict()}
    if args.action == "fit":
        if f is None:
            raise CliError(f"no finite lag mutual information to fit for {cfg.model!r}")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fit = fit_asymptotic_coeffs(sample_grid(f, args.dt_min, args.dt_max, args.points))
        payload.update({"fit": fit.as_dict(), "dt_min": args.dt_min, "dt_max": args.dt_max,
                        "points": args.points, "warnings": [str(w.message) for w in caught]})
    out = _out_path(args, "coeffs.json")
    write_json(out, payload, _meta(args, cfg, None))
    _say(args, f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# figure tables and validation
# ---------------------------------------------------------------------------


def cmd_fig2(args) -> int:
    cfg = load_config(args.params, "coupled")
    p = cfg.params
    seed = _seed(args, cfg)
    window = _window(args, cfg, 20.0)
    step = args.grid_step or cfg.control("grid_step", 1e-3)
    x, y = simulate_coupled_spiking(p, window, seed, history=_history(cfg))
    cond = coupled_conditional_trace(x, y, p, step)
    full = run_coupled_filter(x, p, grid_step=step, initial=_initial(cfg)).trace()
    markov = coupled_markov_trace(p, window, step)
    info = pathwise_decomposition(x, cond, full, markov)
    out_dir = Path(args.out_dir or ".")
    meta = _meta(args, cfg, seed, lambda0_stationary=coupled_markov_rate(p))
    write_events(out_dir / "fig2_x.csv", x, meta)
    write_events(out_dir / "fig2_y.csv", y, meta)
    t, (vc, vf, vm) = align_traces([cond, full, markov])
    write_csv(out_dir / "fig2_intensities.csv", ("t", "lambda_cond", "lambda_full", "lambda_markov"),
              zip(t, vc, vf, vm), meta)
    write_info_trace(out_dir / "fig2_info.csv", info, meta)
    _say(args, f"fig2 bundle in {out_dir}: T={info.total_T:.4f} nats, M={info.total_M:.4f} nats")
    return EXIT_OK


def cmd_fig3(args) -> int:
    cfg = load_config(args.params, "ou")
    out = _out_path(args, "fig3_surface.csv")
    skipped = _write_sweep(out, cfg.params, _grid(args.rho_grid), _grid(args.vy_grid),
                           _meta(args, cfg, None))
    _say(args, f"wrote {out} ({skipped} grid points skipped)")
    return EXIT_OK


def cmd_validate(args) -> int:
    numbers = sorted({int(v) for v in args.only.split(",")}) if args.only else None
    if numbers and any(n not in CRITERIA for n in numbers):
        raise CliError(f"criteria are numbered {min(CRITERIA)}..{max(CRITERIA)}")
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    echo = None if args.quiet else print
    results = run_criteria(numbers, seed=seed, threads=args.threads, echo=echo,
                           scale=args.tolerance_scale)
    ok = all(r.passed(args.tolerance_scale) for r in results)
    out = _out_path(args, "validation.json")
    write_json(out, {"passed": ok, "tolerance_scale": args.tolerance_scale,
                     "criteria": [r.as_dict(args.tolerance_scale) for r in results]},
               _meta(args, None, seed))
    _say(args, f"{sum(r.passed(args.tolerance_scale) for r in results)}/{len(results)} criteria pass; "
               f"report in {out}")
    return EXIT_OK if ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    # Global flags may appear before or after the subcommand. SUPPRESS keeps a
    # subcommand's defaults from overwriting values given before it.
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base random seed")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads for ensembles")
    g.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for relative output paths")
    g.add_argument("--params", default=argparse.SUPPRESS, metavar="FILE",
                   help="configuration file (flat key = value)")
    g.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                   help="suppress progress messages")

    parser = argparse.ArgumentParser(
        prog="ctinfo", parents=[common], description="Pathwise information dynamics toolkit.",
        epilog=describe_keys(), formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"ctinfo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text,
                            epilog=describe_keys(), formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.set_defaults(out=None)
        return sp

    sp = add("simulate", "simulate a point-process model and write its events")
    sp.add_argument("model", choices=POINT_MODELS)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_simulate)

    sp = add("filter", "filter a target spike train for its marginal intensity")
    sp.add_argument("--model", choices=("coupled",), default="coupled")
    sp.add_argument("--events", required=True)
    sp.add_argument("--grid-step", type=float, default=None)
    sp.add_argument("--initial", choices=("empty", "stationary"), default=None,
                    help="drive history before t0 (default: the config's 'history', else empty)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_filter)

    sp = add("estimate", "estimate an ergodic information rate from events")
    sp.add_argument("measure", choices=("memory", "transfer", "elusive", "binned"))
    sp.add_argument("--model", choices=POINT_MODELS, required=True)
    sp.add_argument("--events", default=None)
    sp.add_argument("--y-events", default=None, help="drive events (transfer)")
    sp.add_argument("--intensity", default=None, help="CSV t,lambda overriding the model intensity")
    sp.add_argument("--phase", type=float, default=None, help="drive phase (event-driven)")
    sp.add_argument("--grid-step", type=float, default=None)
    sp.add_argument("--burn-in", type=float, default=None)
    sp.add_argument("--include-waiting", action="store_true",
                    help="add the zero-mean waiting-time integral to the jump terms")
    sp.add_argument("--dt-bins", default=None, help="bin widths (binned)")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--k", type=int, default=None, help="history bins (binned)")
    grp.add_argument("--history-span", type=float, default=None, help="history length (binned)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_estimate)

    sp = add("analytic", "closed-form rates of a point-process model")
    sp.add_argument("model", choices=("refractory", "event-driven"))
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_analytic)

    sp = add("ou", "coupled Ornstein-Uhlenbeck pair")
    sp.add_argument("action", choices=("simulate", "rates", "sweep", "martingale"))
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--rho-grid", default="-1:1:21")
    sp.add_argument("--vy-grid", default="0.05:1:20")
    sp.add_argument("--n-paths", type=int, default=None)
    sp.add_argument("--probes", default="0.5,1,2")
    sp.add_argument("--path", default=None, help="sample-path CSV for a single accumulator")
    sp.add_argument("--trace", default=None, help="also write the accumulator trace (simulate)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_ou)

    sp = add("icap", "small-lag coefficients of the predictive capacity")
    sp.add_argument("action", choices=("coeffs", "fit"))
    sp.add_argument("--model", dest="model_cfg", default=None, metavar="FILE",
                    help="config naming the model: two-state, ou-scalar or spike-train")
    sp.add_argument("--dt-min", type=float, default=1e-5)
    sp.add_argument("--dt-max", type=float, default=1e-3)
    sp.add_argument("--points", type=int, default=40)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_icap)

    sp = add("fig2", "one coupled-spiking realisation with its information traces")
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--grid-step", type=float, default=None)
    sp.set_defaults(func=cmd_fig2)

    sp = add("fig3", "OU rate surface over noise correlation and drive noise")
    sp.add_argument("--rho-grid", default="-1:1:41")
    sp.add_argument("--vy-grid", default="0.01:1:100")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_fig3)

    sp = add("validate", "run the acceptance criteria")
    sp.add_argument("--only", default=None, help="comma-separated criterion numbers")
    sp.add_argument("--tolerance-scale", type=float, default=1.0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for key, value in GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except (ParameterError, ValidationError, InsufficientDataError, FileNotFoundError) as exc:
        print(f"ctinfo: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (NumericalError, ArithmeticError) as exc:
        print(f"ctinfo: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CtinfoError as exc:
        print(f"ctinfo: error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())

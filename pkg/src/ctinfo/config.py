"""Flat ``key = value`` configuration files.

Every model has a fixed set of parameter keys. A small set of run controls
(horizon, step sizes, ensemble size) is accepted in any file. Anything else
is rejected, so a typo never silently falls back to a default.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .exceptions import ParameterError
from .icap import MasterEqModel
from .oudyn import OUParams, fig3_params
from .simulate import (FIG2_PARAMS, CoupledSpikingParams, EventDrivenParams, PhaseDistribution,
                       RefractoryParams)


class ConfigError(ParameterError):
    """Malformed configuration file or unknown key."""


MODEL_KEYS: dict[str, dict[str, str]] = {
    "poisson": {"rate": "constant event rate (1/s)"},
    "refractory": {
        "mu": "event rate outside the refractory period (1/s)",
        "delta_x": "refractory period (s)",
    },
    "event-driven": {
        "c": "spike probability per drive window, in [0, 1]",
        "delta_x": "response window and refractory period (s)",
        "delta_y": "drive period (s), greater than 2*delta_x",
        "phase_dist": "drive phase law: 'uniform', 'delta:<a>' or 'tabulated:<w1>,<w2>,...'",
    },
    "coupled": {
        "lambda_y": "drive (Y) Poisson rate (1/s)",
        "lambda_base": "target base rate (1/s)",
        "m": "amplitude of the Gaussian rate bump",
        "sigma": "width of the bump (s)",
        "t_cut": "time after a drive spike when the bump is cut (s)",
    },
    "ou": {
        "A": "self-coupling of x", "B": "coupling y -> x",
        "C": "coupling x -> y", "D": "self-coupling of y",
        "Vx": "noise strength of x", "Vy": "noise strength of y",
        "rho": "noise correlation, in [-1, 1]",
    },
    "two-state": {
        "kplus": "rate of the A -> B transition (1/s)",
        "kminus": "rate of the B -> A transition (1/s)",
    },
    "ou-scalar": {"kappa": "relaxation rate of a scalar OU process (1/s)"},
    "spike-train": {"lambda0": "mean spike rate of an idealised spike train (1/s)"},
}

CONTROL_KEYS: dict[str, str] = {
    "model": "model name; required where the command does not fix it",
    "horizon": "length of the simulated window (s)",
    "t0": "start of the window (s)",
    "seed": "base random seed (the --seed flag takes precedence)",
    "dt": "time step for diffusions (s)",
    "grid_step": "filter and trace grid step (s)",
    "burn_in": "initial stretch excluded from rate estimates (s)",
    "n_paths": "ensemble size",
    "history": "coupled model: drive known silent this long before t0 (s); default: never fired",
}

MODEL_ALIASES = {"event_driven": "event-driven", "coupled-spiking": "coupled",
                 "coupled_spiking": "coupled", "two_state": "two-state"}


def describe_keys() -> str:
    """Help text listing every accepted configuration key."""
    lines = ["configuration keys (flat 'key = value' text, '#' starts a comment):"]
    for model, keys in MODEL_KEYS.items():
        lines.append(f"  model {model}:")
        lines.extend(f"    {k:<12} {doc}" for k, doc in keys.items())
    lines.append("  run controls (any model):")
    lines.extend(f"    {k:<12} {doc}" for k, doc in CONTROL_KEYS.items())
    return "\n".join(lines)


def canonical_model(name: str) -> str:
    name = MODEL_ALIASES.get(name, name)
    if name not in MODEL_KEYS:
        raise ConfigError(f"unknown model {name!r}; choose from {sorted(MODEL_KEYS)}")
    return name


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Split config text into raw string values, rejecting duplicates and bad lines."""
    out: dict[str, str] = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{n}: empty key or value")
        if key in out:
            raise ConfigError(f"{source}:{n}: duplicate key {key!r}")
        out[key] = value
    return out


def _number(key: str, value: str) -> float:
    try:
        v = float(value)
    except ValueError:
        raise ConfigError(f"key {key!r}: {value!r} is not a number") from None
    if not math.isfinite(v):
        raise ConfigError(f"key {key!r} must be finite")
    return v


def parse_phase(value: str) -> PhaseDistribution:
    """Parse ``uniform``, ``delta:<a>`` or ``tabulated:<w1>,<w2>,...``."""
    kind, _, arg = value.partition(":")
    kind = kind.strip()
    if kind == "uniform" and not arg:
        return PhaseDistribution.uniform()
    if kind == "delta":
        return PhaseDistribution.delta(_number("phase_dist", arg or "0"))
    if kind == "tabulated" and arg:
        return PhaseDistribution.tabulated([_number("phase_dist", w) for w in arg.split(",")])
    raise ConfigError(f"cannot parse phase_dist {value!r}")


@dataclass
class RunConfig:
    """A validated configuration: model parameters plus run controls."""

    model: str
    params: Any
    controls: dict[str, float] = field(default_factory=dict)
    raw: dict[str, str] = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def control(self, key: str, default=None):
        return self.controls.get(key, default)


def config_hash(raw: dict[str, str]) -> str:
    """Short digest of the normalised key/value content."""
    blob = "\n".join(f"{k}={raw[k]}" for k in sorted(raw))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def default_params(model: str):
    """Parameters used when no configuration file is given."""
    model = canonical_model(model)
    return {
        "poisson": lambda: {"rate": 1.0},
        "refractory": lambda: RefractoryParams(1.0, 1.0),
        "event-driven": lambda: EventDrivenParams(0.5, 0.1, 1.0),
        "coupled": lambda: FIG2_PARAMS,
        "ou": lambda: fig3_params(),
        "two-state": lambda: MasterEqModel.two_state(1.0, 2.0),
        "ou-scalar": lambda: {"kappa": 1.0},
        "spike-train": lambda: {"lambda0": 1.0},
    }[model]()


def build_params(model: str, values: dict[str, str]):
    """Construct the model's parameter object; missing keys take their defaults."""
    model = canonical_model(model)
    allowed = MODEL_KEYS[model]
    unknown = set(values) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) for model {model!r}: {sorted(unknown)}")
    nums = {k: _number(k, v) for k, v in values.items() if k != "phase_dist"}
    if model == "poisson":
        rate = nums.get("rate", 1.0)
        if rate <= 0:
            raise ParameterError("rate must be positive")
        return {"rate": rate}
    if model == "refractory":
        return RefractoryParams(nums.get("mu", 1.0), nums.get("delta_x", 1.0))
    if model == "event-driven":
        phase = parse_phase(values["phase_dist"]) if "phase_dist" in values else PhaseDistribution.uniform()
        return EventDrivenParams(nums.get("c", 0.5), nums.get("delta_x", 0.1),
                                 nums.get("delta_y", 1.0), phase)
    if model == "coupled":
        return CoupledSpikingParams(**{k: nums.get(k, getattr(FIG2_PARAMS, k)) for k in allowed})
    if model == "ou":
        base = fig3_params()
        return OUParams(**{k: nums.get(k, getattr(base, k)) for k in allowed})
    if model == "two-state":
        return MasterEqModel.two_state(nums.get("kplus", 1.0), nums.get("kminus", 2.0))
    if model == "ou-scalar":
        if nums.get("kappa", 1.0) <= 0:
            raise ParameterError("kappa must be positive")
        return {"kappa": nums.get("kappa", 1.0)}
    if nums.get("lambda0", 1.0) < 0:
        raise ParameterError("lambda0 must be nonnegative")
    return {"lambda0": nums.get("lambda0", 1.0)}


def load_config(path: str | Path | None, model: str | None = None) -> RunConfig:
    """Read and validate a configuration file.

    Parameters
    ----------
    path : path-like or None
        File to read. ``None`` gives the model defaults.
    model : str, optional
        Model fixed by the command. A ``model`` key in the file must agree.
    """
    raw = parse_text(Path(path).read_text(), str(path)) if path is not None else {}
    file_model = raw.get("model")
    if model is None and file_model is None:
        raise ConfigError("the configuration must name a model ('model = ...')")
    chosen = canonical_model(model or file_model)
    if file_model is not None and canonical_model(file_model) != chosen:
        raise ConfigError(f"config names model {file_model!r} but the command needs {chosen!r}")
    controls = {k: _number(k, v) for k, v in raw.items() if k in CONTROL_KEYS and k != "model"}
    for k in ("n_paths", "seed"):
        if k in controls and (controls[k] < 0 or controls[k] != int(controls[k])):
            raise ConfigError(f"{k} must be a nonnegative integer")
    model_values = {k: v for k, v in raw.items() if k not in CONTROL_KEYS}
    params = build_params(chosen, model_values)
    return RunConfig(chosen, params, controls, raw)


def params_dict(params) -> dict[str, Any]:
    """JSON-friendly view of a parameter object."""
    if isinstance(params, dict):
        return dict(params)
    if isinstance(params, MasterEqModel):
        return {f"{i}->{j}": w for (i, j), w in params.rates.items()}
    out = {}
    for k, v in vars(params).items():
        if isinstance(v, PhaseDistribution):
            v = {"kind": v.kind, "location": v.location,
                 "density": None if v.density is None else np.asarray(v.density).tolist()}
        out[k] = v
    return out

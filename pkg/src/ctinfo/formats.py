"""Reading and writing paths, traces and summaries.

CSV files start with one metadata line::

    # ctinfo <version> seed=<seed> config_hash=<hash> key=value ...

followed by a header row. JSON summaries carry the same metadata under a
``meta`` key.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .exceptions import ParameterError, ValidationError
from .paths import EventPath, InfoTrace, IntensityTrace, SamplePath, TimeWindow

EVENT_HEADER = ("t",)
SAMPLE_HEADER = ("t", "x", "y")
INFO_HEADER = ("t", "M_cum", "T_cum", "M_rate_cont", "T_rate_cont")
JUMP_HEADER = ("t", "dM_jump", "dT_jump")
FIG3_HEADER = ("rho", "Vy", "TE_yx", "TE_xy", "M_x", "M_y", "kappa_eff")


def make_meta(seed: int | None = None, config_hash: str | None = None, **extra) -> dict[str, Any]:
    meta: dict[str, Any] = {"version": __version__, "seed": seed, "config_hash": config_hash}
    meta.update(extra)
    return meta


def _preamble(meta: dict[str, Any]) -> str:
    parts = [f"# ctinfo {meta.get('version', __version__)}"]
    for k, v in meta.items():
        if k == "version":
            continue
        if isinstance(v, (list, tuple)):
            v = ",".join(repr(float(a)) for a in v)
        parts.append(f"{k}={v}")
    return " ".join(parts)


def _parse_preamble(line: str) -> dict[str, str]:
    fields = line.lstrip("#").split()
    meta = {"version": fields[1] if len(fields) > 1 else ""}
    for f in fields[2:]:
        k, _, v = f.partition("=")
        meta[k] = v
    return meta


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(_preamble(meta) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[dict[str, str], list[str], np.ndarray]:
    """Return ``(meta, header, data)``; a missing preamble gives empty metadata."""
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    meta: dict[str, str] = {}
    if lines and lines[0].startswith("#"):
        meta = _parse_preamble(lines[0])
        lines = lines[1:]
    lines = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValidationError(f"{path}: missing header")
    header = [h.strip() for h in lines[0].split(",")]
    try:
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from None
    data = data.reshape(-1, len(header))
    return meta, header, data


def _require(header: list[str], expected: Sequence[str], path) -> None:
    if tuple(header) != tuple(expected):
        raise ValidationError(f"{path}: expected header {','.join(expected)}, got {','.join(header)}")


def write_events(path, x: EventPath, meta: dict) -> Path:
    w = x.window
    bounds = (w.t0, w.t_end) if w.tau == w.t0 else (w.t0, w.t_end, w.tau)
    meta = dict(meta, window=bounds)
    return write_csv(path, EVENT_HEADER, ((t,) for t in x.events), meta)


def read_events(path, window: TimeWindow | None = None) -> tuple[EventPath, dict[str, str]]:
    """Read an event file.

    The window comes from the argument, else from the preamble
    (``window=t0,t_end`` or ``window=t0,t_end,tau``), else from the data.
    """
    meta, header, data = read_csv(path)
    _require(header, EVENT_HEADER, path)
    ev = data[:, 0]
    if window is None:
        if "window" in meta:
            window = TimeWindow(*(float(v) for v in meta["window"].split(",")))
        elif ev.size:
            window = TimeWindow(min(0.0, ev[0]), ev[-1] + 1e-9)
        else:
            raise ParameterError(f"{path}: empty event file and no window given")
    return EventPath(window, ev), meta


def write_sample_path(path, p: SamplePath, meta: dict) -> Path:
    return write_csv(path, SAMPLE_HEADER, zip(p.times, p.values_x, p.values_y), meta)


def read_sample_path(path) -> SamplePath:
    _, header, data = read_csv(path)
    _require(header, SAMPLE_HEADER, path)
    t = data[:, 0]
    if t.size < 2:
        raise ValidationError(f"{path}: need at least two samples")
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not np.allclose(np.diff(t), dt, rtol=1e-6, atol=1e-12):
        raise ValidationError(f"{path}: samples are not equally spaced")
    return SamplePath(TimeWindow(t[0], t[-1]), dt, data[:, 1], data[:, 2])


def jump_file_for(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + "_jumps" + path.suffix)


def write_info_trace(path, tr: InfoTrace, meta: dict) -> tuple[Path, Path]:
    """Write the continuous trace and its companion jump file."""
    main = write_csv(path, INFO_HEADER,
                     zip(tr.times, tr.cumulative_M, tr.cumulative_T, tr.rate_M, tr.rate_T), meta)
    jumps = write_csv(jump_file_for(path), JUMP_HEADER,
                      zip(tr.jump_times, tr.jump_M, tr.jump_T), meta)
    return main, jumps


def read_info_trace(path) -> InfoTrace:
    _, header, data = read_csv(path)
    _require(header, INFO_HEADER, path)
    jpath = jump_file_for(path)
    _, jheader, jdata = read_csv(jpath)
    _require(jheader, JUMP_HEADER, jpath)
    return InfoTrace(data[:, 0], data[:, 1], data[:, 2], jdata[:, 0], jdata[:, 1], jdata[:, 2],
                     data[:, 3], data[:, 4])


def write_intensity(path, tr: IntensityTrace, meta: dict, name: str = "lambda_full") -> Path:
    return write_csv(path, ("t", name), zip(tr.times, tr.values), meta)


def read_intensity(path) -> IntensityTrace:
    _, header, data = read_csv(path)
    if len(header) != 2 or header[0] != "t":
        raise ValidationError(f"{path}: expected header t,<intensity>")
    return IntensityTrace(data[:, 0], data[:, 1])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path, payload: dict, meta: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"meta": meta}
    body.update(payload)
    path.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=False) + "\n")
    return path

import json
import math

import numpy as np
import pytest

from ctinfo.config import (ConfigError, build_params, canonical_model, config_hash, describe_keys,
                           load_config, params_dict, parse_phase, parse_text)
from ctinfo.exceptions import ParameterError, ValidationError
from ctinfo.formats import (FIG3_HEADER, make_meta, read_csv, read_events, read_info_trace,
                            read_intensity, read_sample_path, write_csv, write_events,
                            write_info_trace, write_intensity, write_json, write_sample_path)
from ctinfo.icap import MasterEqModel
from ctinfo.oudyn import OUParams
from ctinfo.paths import EventPath, InfoTrace, IntensityTrace, SamplePath, TimeWindow
from ctinfo.simulate import CoupledSpikingParams, EventDrivenParams, RefractoryParams


def test_parse_text_rules():
    raw = parse_text("# comment\nmu = 2.0  # trailing\n\ndelta_x=0.5\n")
    assert raw == {"mu": "2.0", "delta_x": "0.5"}
    with pytest.raises(ConfigError, match="duplicate"):
        parse_text("mu = 1\nmu = 2")
    with pytest.raises(ConfigError, match="key = value"):
        parse_text("mu 1")
    with pytest.raises(ConfigError):
        parse_text("mu =")


def test_build_params_per_model():
    assert build_params("refractory", {"mu": "2", "delta_x": "0.25"}) == RefractoryParams(2.0, 0.25)
    assert isinstance(build_params("coupled", {"m": "0"}), CoupledSpikingParams)
    assert build_params("ou", {"rho": "-0.5"}).rho == -0.5
    assert isinstance(build_params("two_state", {}), MasterEqModel)
    ed = build_params("event-driven", {"phase_dist": "delta:0.3"})
    assert isinstance(ed, EventDrivenParams) and ed.phase_dist.kind == "delta"
    with pytest.raises(ConfigError, match="unknown key"):
        build_params("refractory", {"mu": "1", "deltax": "1"})
    with pytest.raises(ConfigError):
        build_params("refractory", {"mu": "abc"})
    with pytest.raises(ConfigError):
        build_params("refractory", {"mu": "inf"})
    with pytest.raises(ParameterError):
        build_params("poisson", {"rate": "-1"})
    with pytest.raises(ConfigError):
        canonical_model("lorenz")


def test_parse_phase():
    assert parse_phase("uniform").kind == "uniform"
    assert parse_phase("delta:0.25").location == 0.25
    tab = parse_phase("tabulated:1,2,3")
    assert tab.kind == "tabulated"
    for bad in ("gauss", "tabulated:", "uniform:3"):
        with pytest.raises(ConfigError):
            parse_phase(bad)


def test_load_config(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("model = refractory\nmu = 3\nhorizon = 50\nseed = 7\n")
    cfg = load_config(f)
    assert cfg.model == "refractory" and cfg.params.mu == 3.0
    assert cfg.control("horizon") == 50.0 and cfg.control("missing", 1) == 1
    assert cfg.config_hash == config_hash({"model": "refractory", "mu": "3", "horizon": "50", "seed": "7"})
    assert len(cfg.config_hash) == 12
    with pytest.raises(ConfigError, match="needs"):
        load_config(f, "poisson")
    with pytest.raises(ConfigError, match="name a model"):
        load_config(None)
    assert load_config(None, "ou").params == OUParams(A=-5, B=5, C=1, D=-2, Vx=1, Vy=1, rho=0)
    f.write_text("model = ou\nn_paths = 2.5\n")
    with pytest.raises(ConfigError):
        load_config(f)


def test_describe_and_params_dict():
    text = describe_keys()
    for key in ("mu", "delta_x", "lambda_y", "kplus", "horizon", "phase_dist"):
        assert key in text
    d = params_dict(EventDrivenParams(0.5, 0.1, 1.0))
    assert d["c"] == 0.5 and d["phase_dist"]["kind"] == "uniform"
    assert params_dict(MasterEqModel.two_state(1.0, 2.0)) == {"A->B": 1.0, "B->A": 2.0}


def test_event_round_trip(tmp_path):
    x = EventPath(TimeWindow(0.0, 10.0), [0.1, 1.0 / 3.0, 7.25])
    p = write_events(tmp_path / "ev.csv", x, make_meta(seed=3, config_hash="abc"))
    first = p.read_text().splitlines()[0]
    assert first.startswith("# ctinfo ") and "seed=3" in first and "config_hash=abc" in first
    y, meta = read_events(p)
    assert np.array_equal(y.events, x.events)
    assert (y.window.t0, y.window.t_end) == (0.0, 10.0)
    assert meta["seed"] == "3"


def test_event_file_without_window(tmp_path):
    p = tmp_path / "ev.csv"
    p.write_text("t\n1.0\n2.0\n")
    x, meta = read_events(p)
    assert meta == {} and x.window.t_end > 2.0
    p.write_text("t\n")
    with pytest.raises(ParameterError):
        read_events(p)
    p.write_text("time\n1.0\n")
    with pytest.raises(ValidationError):
        read_events(p)
    p.write_text("t\nabc\n")
    with pytest.raises(ValidationError):
        read_csv(p)


def test_sample_path_round_trip(tmp_path):
    sp = SamplePath(TimeWindow(0.0, 1.0), 0.25, np.arange(5.0), -np.arange(5.0))
    write_sample_path(tmp_path / "s.csv", sp, make_meta())
    back = read_sample_path(tmp_path / "s.csv")
    assert back.dt == pytest.approx(0.25)
    assert np.array_equal(back.values_y, sp.values_y)
    (tmp_path / "bad.csv").write_text("t,x,y\n0,1,1\n0.1,1,1\n0.5,1,1\n")
    with pytest.raises(ValidationError):
        read_sample_path(tmp_path / "bad.csv")


def test_info_and_intensity_round_trip(tmp_path):
    tr = InfoTrace(np.array([0.0, 1.0, 2.0]), np.array([0.0, 0.5, 0.2]), np.zeros(3),
                   np.array([1.0]), np.array([0.7]), np.array([0.0]),
                   np.array([-0.2, -0.2, -0.3]), np.zeros(3))
    main, jumps = write_info_trace(tmp_path / "info.csv", tr, make_meta())
    assert jumps.name == "info_jumps.csv"
    back = read_info_trace(main)
    assert np.array_equal(back.jump_M, tr.jump_M) and np.array_equal(back.cumulative_M, tr.cumulative_M)
    lam = IntensityTrace([0.0, 1.0, 1.0, 2.0], [1.0, 1.0, 2.0, 2.0])
    write_intensity(tmp_path / "lam.csv", lam, make_meta())
    back_lam = read_intensity(tmp_path / "lam.csv")
    assert back_lam.integral() == pytest.approx(3.0)


def test_json_handles_non_finite(tmp_path):
    p = write_json(tmp_path / "o.json", {"v": math.nan, "a": np.array([1.0, math.inf]),
                                         "n": np.int64(3), "b": np.bool_(True)}, make_meta(seed=1))
    body = json.loads(p.read_text())
    assert body["meta"]["seed"] == 1
    assert body["v"] == "nan" and body["a"] == [1.0, "inf"] and body["n"] == 3 and body["b"] is True


def test_csv_header_exact(tmp_path):
    p = write_csv(tmp_path / "f.csv", FIG3_HEADER, [[0.0] * 7], make_meta())
    assert p.read_text().splitlines()[1] == "rho,Vy,TE_yx,TE_xy,M_x,M_y,kappa_eff"

import json
import subprocess
import sys

import numpy as np
import pytest

from ctinfo.cli import main
from ctinfo.formats import read_csv, read_events


def run(tmp_path, *argv):
    return main(["--quiet", "--out-dir", str(tmp_path), *argv])


def cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_version_entry_point():
    out = subprocess.run([sys.executable, "-m", "ctinfo.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("ctinfo ")


def test_simulate_then_estimate_refractory(tmp_path):
    assert run(tmp_path, "--seed", "5", "simulate", "refractory", "--horizon", "5000") == 0
    x, meta = read_events(tmp_path / "events.csv")
    assert meta["seed"] == "5" and meta["model"] == "refractory"
    assert len(x) > 2000
    assert run(tmp_path, "estimate", "memory", "--model", "refractory",
               "--events", str(tmp_path / "events.csv"), "--burn-in", "10") == 0
    body = json.loads((tmp_path / "summary.json").read_text())
    assert body["value"] == pytest.approx(np.log(2) / 2, rel=0.05)
    assert body["meta"]["seed"] == 5


def test_event_driven_phase_travels_in_metadata(tmp_path):
    assert run(tmp_path, "simulate", "event-driven", "--horizon", "2000") == 0
    _, meta = read_events(tmp_path / "events.csv")
    assert "phase" in meta
    assert (tmp_path / "events_y.csv").exists()
    assert run(tmp_path, "estimate", "memory", "--model", "event-driven",
               "--events", str(tmp_path / "events.csv")) == 0
    body = json.loads((tmp_path / "summary.json").read_text())
    assert body["value"] == pytest.approx(0.153426, rel=0.15)


def test_coupled_filter_and_transfer(tmp_path):
    assert run(tmp_path, "simulate", "coupled", "--horizon", "200") == 0
    assert run(tmp_path, "filter", "--events", str(tmp_path / "events.csv"), "--grid-step", "0.01") == 0
    meta, header, data = read_csv(tmp_path / "intensity.csv")
    assert header == ["t", "lambda_full"] and data.shape[0] > 100
    assert run(tmp_path, "estimate", "transfer", "--model", "coupled", "--grid-step", "0.01",
               "--events", str(tmp_path / "events.csv"), "--y-events", str(tmp_path / "events_y.csv")) == 0
    assert run(tmp_path, "estimate", "transfer", "--model", "refractory",
               "--events", str(tmp_path / "events.csv")) == 3


def test_elusive_and_binned(tmp_path):
    assert run(tmp_path, "estimate", "elusive", "--model", "refractory", "--out", "e.json") == 0
    assert json.loads((tmp_path / "e.json").read_text())["value"] == pytest.approx(0.193147, abs=1e-6)
    assert run(tmp_path, "--seed", "3", "simulate", "refractory", "--horizon", "500",
               "--params", cfg(tmp_path, "mu = 0.05\ndelta_x = 0.5\n")) == 0
    assert run(tmp_path, "estimate", "binned", "--model", "refractory", "--events",
               str(tmp_path / "events.csv"), "--dt-bins", "0.1,0.05", "--k", "2") == 0
    body = json.loads((tmp_path / "summary.json").read_text())
    assert [r["dt"] for r in body["table"]] == [0.1, 0.05]


def test_analytic(tmp_path):
    assert run(tmp_path, "analytic", "event-driven") == 0
    body = json.loads((tmp_path / "report.json").read_text())
    assert body["M_ring"] == pytest.approx(0.153426, abs=1e-6)
    assert run(tmp_path, "analytic", "refractory") == 0
    assert json.loads((tmp_path / "report.json").read_text())["max_rate"] == pytest.approx(np.exp(-1))


def test_ou_commands(tmp_path):
    assert run(tmp_path, "ou", "rates") == 0
    body = json.loads((tmp_path / "ou_rates.json").read_text())
    assert body["TE_yx"] == pytest.approx(1.6925824, abs=1e-7)
    assert run(tmp_path, "ou", "simulate", "--horizon", "1", "--trace", str(tmp_path / "acc.csv")) == 0
    assert (tmp_path / "acc_jumps.csv").exists()
    assert run(tmp_path, "ou", "martingale", "--path", str(tmp_path / "ou_path.csv")) == 0
    assert run(tmp_path, "ou", "martingale", "--n-paths", "5", "--horizon", "1", "--probes", "0.5") == 0
    assert run(tmp_path, "ou", "sweep", "--rho-grid=-1,0,1", "--vy-grid", "0.1:1:4") == 0
    _, header, data = read_csv(tmp_path / "ou_sweep.csv")
    assert data.shape == (12, 7)
    bad = cfg(tmp_path, "model = ou\nA = 1\n")
    assert run(tmp_path, "--params", bad, "ou", "rates") == 3


def test_fig_commands(tmp_path):
    assert run(tmp_path, "fig2", "--horizon", "5", "--grid-step", "0.01") == 0
    for name in ("fig2_x.csv", "fig2_y.csv", "fig2_intensities.csv", "fig2_info.csv", "fig2_info_jumps.csv"):
        assert (tmp_path / name).exists()
    _, header, _ = read_csv(tmp_path / "fig2_intensities.csv")
    assert header == ["t", "lambda_cond", "lambda_full", "lambda_markov"]
    assert run(tmp_path, "fig3", "--rho-grid=-1,1", "--vy-grid", "0.2,0.6") == 0
    _, header, data = read_csv(tmp_path / "fig3_surface.csv")
    assert header == ["rho", "Vy", "TE_yx", "TE_xy", "M_x", "M_y", "kappa_eff"] and data.shape == (4, 7)


def test_icap_commands(tmp_path):
    two = cfg(tmp_path, "model = two-state\nkplus = 1\nkminus = 2\n", "two.cfg")
    assert run(tmp_path, "icap", "coeffs", "--model", two) == 0
    body = json.loads((tmp_path / "coeffs.json").read_text())
    assert body["closed_form"]["c11"] == pytest.approx(4 / 3)
    ou = cfg(tmp_path, "model = ou-scalar\nkappa = 2\n", "ou.cfg")
    assert run(tmp_path, "icap", "fit", "--model", ou) == 0
    body = json.loads((tmp_path / "coeffs.json").read_text())
    assert body["fit"]["c10"] == pytest.approx(1.0, rel=1e-2)
    spk = cfg(tmp_path, "model = spike-train\nlambda0 = 2\n", "spk.cfg")
    assert run(tmp_path, "icap", "coeffs", "--model", spk) == 0
    assert run(tmp_path, "icap", "fit", "--model", spk) == 3


def test_validate_exit_codes(tmp_path):
    assert run(tmp_path, "validate", "--only", "4") == 0
    body = json.loads((tmp_path / "validation.json").read_text())
    assert body["passed"] is True and body["criteria"][0]["criterion"] == 4
    assert run(tmp_path, "validate", "--only", "4", "--tolerance-scale", "0") == 2
    assert run(tmp_path, "validate", "--only", "99") == 3


def test_parameter_errors(tmp_path):
    assert run(tmp_path, "simulate", "refractory", "--params", cfg(tmp_path, "mu = 1\nmux = 2\n")) == 3
    assert run(tmp_path, "estimate", "memory", "--model", "poisson",
               "--events", str(tmp_path / "missing.csv")) == 3
    assert run(tmp_path, "ou", "sweep", "--rho-grid", "a:b") == 3
    with pytest.raises(SystemExit):
        run(tmp_path, "--threads", "0", "analytic", "refractory")


def test_coupled_history_round_trip(tmp_path):
    c = cfg(tmp_path, "model = coupled\nhistory = 0\nhorizon = 100\n")
    for seed in range(20):
        assert run(tmp_path, "--seed", str(seed), "--params", c, "simulate", "coupled") == 0
        y, _ = read_events(tmp_path / "events_y.csv")
        if np.any(y.events < 0):
            break
    assert y.window.tau == -1.0 and np.any(y.events < 0)
    assert run(tmp_path, "--params", c, "estimate", "transfer", "--model", "coupled", "--grid-step", "0.01",
               "--events", str(tmp_path / "events.csv"), "--y-events", str(tmp_path / "events_y.csv")) == 0
    assert run(tmp_path, "--params", c, "filter", "--events", str(tmp_path / "events.csv"),
               "--grid-step", "0.01") == 0

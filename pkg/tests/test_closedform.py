import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ctinfo.closedform import (event_driven_lambda0, event_driven_Mdot, event_driven_overestimate,
                               event_driven_report, event_driven_ring_rate,
                               event_driven_stationary_rate, phase_recovery,
                               refractory_closed_forms, refractory_elusive_information,
                               refractory_memory_rate, xi_integral)
from ctinfo.exceptions import InsufficientDataError, ParameterError
from ctinfo.infomeasures import ergodic_memory_rate
from ctinfo.intensities import event_driven_traces
from ctinfo.paths import EventPath, IntensityTrace, TimeWindow
from ctinfo.simulate import EventDrivenParams, PhaseDistribution, simulate_event_driven


def test_refractory_examples():
    r = refractory_closed_forms(1.0, 1.0)
    assert r["lambda0"] == 0.5
    assert r["M_rate"] == pytest.approx(math.log(2) / 2)
    assert r["argmax_delta_x"] == pytest.approx(math.e - 1)
    assert r["max_rate"] == pytest.approx(1 / math.e)
    assert refractory_closed_forms(2.0, 0.0)["M_rate"] == 0.0
    assert refractory_elusive_information(1.0, 1.0) == pytest.approx(0.193147, abs=1e-6)
    with pytest.raises(ParameterError):
        refractory_closed_forms(0.0, 1.0)


def test_refractory_maximum_is_global():
    for mu in (0.5, 1.0, 3.0):
        grid = np.linspace(0, 20 / mu, 200001)
        vals = refractory_memory_rate(mu, grid)
        assert vals.max() <= mu / math.e + 1e-12
        assert grid[np.argmax(vals)] == pytest.approx((math.e - 1) / mu, abs=1e-3 / mu)


def test_event_driven_examples():
    c, dx, dy = 0.5, 0.1, 1.0
    assert event_driven_ring_rate(c, dy) == pytest.approx(0.153426, abs=1e-6)
    assert event_driven_stationary_rate(c, dx, dy) == pytest.approx(1.304719, abs=1e-6)
    assert event_driven_overestimate(c, dx, dy) == pytest.approx(1.151293, abs=1e-6)
    assert event_driven_ring_rate(0.0, dy) == 0.0
    # c = 1 makes the window spike certain; the ring rate stays finite.
    assert math.isfinite(event_driven_ring_rate(1.0, dy))


def test_Mdot_integrates_to_ring_rate():
    c, dx, dy = 0.5, 0.1, 1.0
    val, _ = integrate.quad(lambda t: float(event_driven_Mdot(c, dx, dy, t)), 0.0, dx,
                            epsabs=1e-13, limit=200)
    assert val / dy == pytest.approx(event_driven_ring_rate(c, dy), abs=1e-8)
    assert float(event_driven_Mdot(c, dx, dy, 0.5)) == 0.0
    lam = event_driven_lambda0(c, dx, dy, np.array([0.05, 0.5, 1.05]))
    assert lam[1] == 0.0 and lam[0] == pytest.approx(lam[2]) and lam[0] > 0


def test_report_and_identities():
    rep = event_driven_report(EventDrivenParams(0.5, 0.1, 1.0))
    assert rep.M_st == pytest.approx(rep.M_ring + rep.overestimate, abs=1e-12)
    assert rep.xi == pytest.approx(-rep.overestimate, abs=1e-12)
    assert rep.M_st - rep.M_phase_marginal == pytest.approx(rep.overestimate + rep.xi, abs=1e-12)
    assert set(rep.as_dict()) == {"M_ring", "M_st", "overestimate", "xi", "M_phase_marginal"}


def test_xi_endpoints():
    c, dx, dy = 0.5, 0.1, 1.0
    over = event_driven_overestimate(c, dx, dy)
    assert xi_integral(EventDrivenParams(c, dx, dy, PhaseDistribution.delta(0.7))) == 0.0
    flat = xi_integral(EventDrivenParams(c, dx, dy, PhaseDistribution.tabulated(np.ones(40))))
    assert flat == pytest.approx(-over, abs=1e-9)


@settings(max_examples=40)
@given(st.lists(st.floats(0.0, 5.0), min_size=4, max_size=60).filter(lambda w: sum(w) > 0.1),
       st.floats(0.05, 1.0))
def test_xi_stays_within_bounds(weights, c):
    dx, dy = 0.1, 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        xi = xi_integral(EventDrivenParams(c, dx, dy, PhaseDistribution.tabulated(weights)), n_cells=600)
    over = event_driven_overestimate(c, dx, dy)
    assert -over - 1e-9 <= xi <= 1e-9


def test_narrow_phase_gives_small_xi():
    c, dx, dy = 0.5, 0.1, 1.0
    dens = np.zeros(100)
    dens[40] = 1.0
    with pytest.warns(RuntimeWarning, match="refinement"):
        xi = xi_integral(EventDrivenParams(c, dx, dy, PhaseDistribution.tabulated(dens)))
    assert -event_driven_overestimate(c, dx, dy) < xi < 0
    assert abs(xi) < 0.1 * event_driven_overestimate(c, dx, dy)


def test_phase_recovery():
    dx, dy = 0.1, 1.0
    ev = np.array([0.38, 1.39, 2.30, 3.35, 4.33])
    assert phase_recovery(EventPath(TimeWindow(0, 5), ev), dx, dy) == pytest.approx(0.30)
    p = EventDrivenParams(0.8, dx, dy)
    x, _, phase = simulate_event_driven(p, TimeWindow(0.0, 2000.0), seed=17)
    est = phase_recovery(x, dx, dy)
    assert 0.0 <= (est - phase) % dy < 0.01
    with pytest.raises(InsufficientDataError):
        phase_recovery(EventPath(TimeWindow(0, 5), [1.0]), dx, dy)


def test_stationary_assumption_rate_from_simulation():
    c, dx, dy = 0.5, 0.1, 1.0
    p = EventDrivenParams(c, dx, dy)
    x, _, phase = simulate_event_driven(p, TimeWindow(0.0, 5e4), seed=23)
    full, _ = event_driven_traces(x, p, phase)
    lam_st = IntensityTrace.constant(c / dy, x.window)
    est = ergodic_memory_rate(x, full, lam_st, burn_in=10.0)
    assert est.value == pytest.approx(event_driven_stationary_rate(c, dx, dy), rel=0.02)

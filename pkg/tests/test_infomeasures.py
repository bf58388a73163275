import math
from dataclasses import replace

import numpy as np
import pytest

from ctinfo.exceptions import (BinningError, ImpossibleEventError, InsufficientDataError,
                               NonEquivalentMeasuresError, ParameterError)
from ctinfo.filtering import marginal_intensity_trace
from ctinfo.infomeasures import (binned_storage_demo, binned_storage_estimate,
                                 discrete_pathwise_memory_rate, discrete_storage_decomposition,
                                 elusive_information, ergodic_memory_rate, ergodic_rate,
                                 ergodic_transfer_rate, log_ratio_at_events, pathwise_decomposition,
                                 pathwise_memory, pathwise_transfer, refractory_truncated_rate,
                                 truncated_memory_rate)
from ctinfo.intensities import (coupled_conditional_trace, coupled_markov_trace,
                                refractory_intensity_trace, refractory_truncated_trace)
from ctinfo.paths import EventPath, IntensityTrace, TimeWindow
from ctinfo.simulate import (FIG2_PARAMS, CoupledSpikingParams, RefractoryParams,
                             simulate_coupled_spiking, simulate_poisson, simulate_refractory)


def test_poisson_memory_is_zero_pathwise():
    w = TimeWindow(0.0, 100.0)
    x = simulate_poisson(2.0, w, seed=5)
    lam = IntensityTrace.constant(2.0, w)
    tr = pathwise_memory(x, lam, lam)
    assert tr.total_M == 0.0
    assert np.all(tr.jump_M == 0.0)


def test_refractory_pathwise_memory_matches_hand_count():
    p = RefractoryParams(1.5, 0.4)
    w = TimeWindow(0.0, 200.0)
    x = simulate_refractory(p, w, seed=11)
    lam_full = refractory_intensity_trace(x, p)
    lam0_val = p.mu / (1 + p.mu * p.delta_x)
    lam0 = IntensityTrace.constant(lam0_val, w)
    tr = pathwise_memory(x, lam_full, lam0)
    n = x.in_observation().size
    # First event sees the full rate too, so every jump is the same.
    assert np.allclose(tr.jump_M, math.log(p.mu / lam0_val))
    expected = n * math.log(p.mu / lam0_val) - (lam_full.integral() - lam0_val * w.duration)
    assert tr.total_M == pytest.approx(expected, rel=1e-10)


def test_refractory_ergodic_rate_jump_and_waiting_parts():
    p = RefractoryParams(1.0, 1.0)
    w = TimeWindow(0.0, 4e4)
    x = simulate_refractory(p, w, seed=21)
    lam_full = refractory_intensity_trace(x, p)
    lam0 = IntensityTrace.constant(0.5, w)
    jumps_only = ergodic_memory_rate(x, lam_full, lam0, burn_in=100.0)
    with_wait = ergodic_memory_rate(x, lam_full, lam0, burn_in=100.0, include_waiting=True)
    target = math.log(2.0) / 2.0
    assert jumps_only.value == pytest.approx(target, rel=0.02)
    assert with_wait.value == pytest.approx(target, abs=4 * with_wait.stderr + 0.01)
    # Time-averaged full intensity equals the mean rate.
    assert lam_full.time_average() == pytest.approx(0.5, rel=0.02)


def test_transfer_vanishes_without_coupling():
    p = CoupledSpikingParams(m=0.0)
    w = TimeWindow(0.0, 200.0)
    x, y = simulate_coupled_spiking(p, w, seed=3)
    cond = coupled_conditional_trace(x, y, p, grid_step=0.01)
    full = marginal_intensity_trace(x, p, grid_step=0.01)
    tr = pathwise_transfer(x, cond, full)
    assert abs(tr.total_T) < 1e-9


def test_chain_rule_on_coupled_path():
    p = FIG2_PARAMS
    w = TimeWindow(0.0, 30.0)
    x, y = simulate_coupled_spiking(p, w, seed=8)
    cond = coupled_conditional_trace(x, y, p, grid_step=1e-3)
    full = marginal_intensity_trace(x, p, grid_step=1e-3)
    markov = coupled_markov_trace(p, w, grid_step=1e-3)
    dec = pathwise_decomposition(x, cond, full, markov)
    both = pathwise_memory(x, cond, markov)
    assert dec.total_M + dec.total_T == pytest.approx(both.total_M, abs=1e-6)
    assert np.allclose(dec.jump_M + dec.jump_T, both.jump_M, atol=1e-12)


def test_rates_are_not_significantly_negative():
    p = FIG2_PARAMS
    w = TimeWindow(0.0, 3000.0)
    x, y = simulate_coupled_spiking(p, w, seed=13)
    cond = coupled_conditional_trace(x, y, p, grid_step=0.01)
    full = marginal_intensity_trace(x, p, grid_step=0.01)
    markov = coupled_markov_trace(p, w, grid_step=0.01)
    for est in (ergodic_transfer_rate(x, cond, full, burn_in=10.0),
                ergodic_memory_rate(x, full, markov, burn_in=10.0)):
        assert est.value >= -3 * est.stderr


def _coupled_rates(m: float, seed: int = 11):
    p = replace(FIG2_PARAMS, m=m)
    w = TimeWindow(0.0, 3000.0)
    x, y = simulate_coupled_spiking(p, w, seed=seed)
    cond = coupled_conditional_trace(x, y, p, grid_step=0.01)
    full = marginal_intensity_trace(x, p, grid_step=0.01)
    markov = coupled_markov_trace(p, w, grid_step=0.01)
    return (ergodic_transfer_rate(x, cond, full, burn_in=10.0),
            ergodic_memory_rate(x, full, markov, burn_in=10.0))


def test_transfer_dominates_memory_at_reference_coupling():
    te, mem = _coupled_rates(FIG2_PARAMS.m)
    gap_se = math.hypot(te.stderr, mem.stderr)
    assert te.value - mem.value > 5 * gap_se


def test_transfer_shrinks_as_coupling_vanishes():
    values = [_coupled_rates(m)[0].value for m in (5.0, 2.5, 1.0, 0.3, 0.0)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] == 0.0


def test_truncated_rate_endpoints():
    p = RefractoryParams(2.0, 0.5)
    lam0 = 2.0 / 2.0
    assert refractory_truncated_rate(p, 0.0) == 0.0
    full = lam0 * math.log1p(1.0)
    assert refractory_truncated_rate(p, 0.5) == pytest.approx(full)
    assert refractory_truncated_rate(p, 3.0) == pytest.approx(full)
    mid = [refractory_truncated_rate(p, s) for s in np.linspace(0, 0.5, 11)]
    assert np.all(np.diff(mid) > 0)


def test_truncated_rate_from_path_matches_theory():
    p = RefractoryParams(1.0, 1.0)
    w = TimeWindow(0.0, 4e4)
    x = simulate_refractory(p, w, seed=31)
    lam0 = IntensityTrace.constant(0.5, w)
    for s in (0.0, 0.4, 1.0):
        est = truncated_memory_rate(x, refractory_truncated_trace(x, p, s), lam0, burn_in=10.0)
        assert est.value == pytest.approx(refractory_truncated_rate(p, s), abs=0.01)


def test_elusive_information_values():
    assert elusive_information(RefractoryParams(1.0, 1.0)) == pytest.approx(0.193147, abs=1e-6)
    assert elusive_information(RefractoryParams(1.0, 0.0)) == 0.0
    p = RefractoryParams(1.0, 1.0)
    x = simulate_refractory(p, TimeWindow(0.0, 2e4), seed=41)
    assert elusive_information(p, x, n_s=21) == pytest.approx(0.193147, rel=0.05)


def test_zero_intensity_at_event_errors():
    w = TimeWindow(0.0, 10.0)
    ev = np.array([2.0])
    zero = IntensityTrace.constant(0.0, w)
    one = IntensityTrace.constant(1.0, w)
    with pytest.raises(ImpossibleEventError):
        log_ratio_at_events(ev, zero, one)
    with pytest.raises(NonEquivalentMeasuresError):
        log_ratio_at_events(ev, one, zero)


def test_insufficient_data():
    w = TimeWindow(0.0, 10.0)
    x = EventPath(w, [1.0, 2.0, 3.0])
    lam = IntensityTrace.constant(1.0, w)
    with pytest.raises(InsufficientDataError):
        ergodic_rate(x, lam, lam)
    with pytest.raises(InsufficientDataError):
        ergodic_rate(x, lam, lam, burn_in=20.0)
    with pytest.raises(ParameterError):
        ergodic_rate(x, lam, lam, n_batches=1)


def test_binned_storage_poisson_near_zero():
    # Low rate and a seed whose events never share a bin.
    x = simulate_poisson(0.05, TimeWindow(0.0, 4e4), seed=3)
    assert abs(binned_storage_estimate(x, 0.05, 3)) < 1e-3


def test_binned_storage_k1_matches_direct_plugin():
    x = simulate_refractory(RefractoryParams(1.0, 1.0), TimeWindow(0.0, 5000.0), seed=4)
    dt = 0.2
    n_bins = int(5000.0 / dt)
    b = np.zeros(n_bins, dtype=int)
    b[np.floor(x.in_observation() / dt).astype(int)] = 1
    a, c = b[:-1], b[1:]
    joint = np.zeros((2, 2))
    np.add.at(joint, (a, c), 1)
    joint /= joint.sum()
    pa, pc = joint.sum(1), joint.sum(0)
    mi = sum(joint[i, j] * math.log(joint[i, j] / (pa[i] * pc[j]))
             for i in range(2) for j in range(2) if joint[i, j] > 0)
    assert binned_storage_estimate(x, dt, 1) == pytest.approx(mi / dt, rel=1e-9)


def test_binning_errors():
    x = EventPath(TimeWindow(0.0, 10.0), [1.0, 1.05, 5.0])
    with pytest.raises(BinningError):
        binned_storage_estimate(x, 0.1, 2)
    with pytest.raises(ParameterError):
        binned_storage_demo(x, [0.01], k=2, history_span=1.0)
    rows = binned_storage_demo(x, [0.01, 0.02], history_span=0.1)
    assert [r[0] for r in rows] == [0.01, 0.02]


def _random_chain(rng):
    p1 = rng.uniform(0.05, 0.95, size=(2, 2))
    P = np.empty((2, 2, 2))
    P[:, :, 1], P[:, :, 0] = p1, 1 - p1
    return P


def test_discrete_oracle_identity_and_pathwise_agreement():
    rng = np.random.default_rng(7)
    for _ in range(5):
        P = _random_chain(rng)
        d = discrete_storage_decomposition(P)
        assert d["A"] == pytest.approx(d["I"] + d["M"], abs=1e-9)
        assert d["M"] >= -1e-12
        assert discrete_pathwise_memory_rate(P) == pytest.approx(d["M"], abs=1e-9)


def test_discrete_markov_chain_has_no_memory():
    P = np.empty((2, 2, 2))
    P[:, 0, 1], P[:, 1, 1] = 0.3, 0.8
    P[:, :, 0] = 1 - P[:, :, 1]
    d = discrete_storage_decomposition(P)
    assert abs(d["M"]) < 1e-12
    assert d["A"] == pytest.approx(d["I"], abs=1e-12)

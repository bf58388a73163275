import math
import warnings

import numpy as np
import pytest
from scipy.linalg import expm

from ctinfo.exceptions import ConditioningError, InsufficientDataError, ParameterError
from ctinfo.icap import (CoefficientSet, MasterEqModel, fit_asymptotic_coeffs, master_eq_coeffs,
                         parametric_ix_two_state, sample_grid, spiking_coeffs,
                         stationary_distribution, two_state_coeffs, two_state_transition)


def lagged_mi(model: MasterEqModel, dt: float) -> float:
    """Brute-force oracle: matrix exponential of the generator."""
    P = stationary_distribution(model)
    T = expm(model.generator() * dt)
    joint = P[:, None] * T
    ratio = np.where(joint > 0, T / P[None, :], 1.0)
    return float(np.sum(joint * np.log(ratio)))


def test_two_state_example():
    c = two_state_coeffs(1.0, 2.0)
    assert c.c00 == pytest.approx(0.6365142, abs=1e-7)
    assert c.c10 == pytest.approx(-0.8712352, abs=1e-7)
    assert c.c11 == pytest.approx(4 / 3)
    assert c.c01 == 0.0
    assert not c.instantaneous_divergent and c.rate_divergent


def test_general_formula_matches_two_state_closed_form():
    for kp, km in ((1.0, 2.0), (0.3, 5.0), (4.0, 4.0)):
        a, b = master_eq_coeffs(MasterEqModel.two_state(kp, km)), two_state_coeffs(kp, km)
        for name in ("c00", "c01", "c10", "c11"):
            assert getattr(a, name) == pytest.approx(getattr(b, name), abs=1e-12)


def test_state_order_does_not_matter():
    rates = {("a", "b"): 1.0, ("b", "c"): 2.0, ("c", "a"): 0.5, ("b", "a"): 0.7}
    c1 = master_eq_coeffs(MasterEqModel(("a", "b", "c"), rates))
    c2 = master_eq_coeffs(MasterEqModel(("c", "a", "b"), rates))
    assert c1.as_dict() == pytest.approx(c2.as_dict())


def test_three_state_expansion_against_matrix_exponential():
    m = MasterEqModel(("a", "b", "c"), {("a", "b"): 1.0, ("b", "c"): 2.0, ("c", "a"): 0.5,
                                        ("b", "a"): 0.7, ("a", "c"): 0.3})
    c = master_eq_coeffs(m)
    for dt in (1e-5, 1e-4):
        err = lagged_mi(m, dt) - float(c.evaluate(dt))
        # Remainder is O(dt^2 ln dt).
        assert abs(err) < 10 * dt * dt * abs(math.log(dt))


def test_two_state_mi_against_transition_matrix():
    kp, km = 1.0, 2.0
    m = MasterEqModel.two_state(kp, km)
    for dt in (1e-3, 0.1, 1.0):
        assert parametric_ix_two_state(kp, km, dt) == pytest.approx(lagged_mi(m, dt), rel=1e-9)
        T = two_state_transition(kp, km, dt)
        assert np.allclose(T, expm(m.generator() * dt))


def test_mi_is_positive_and_decreasing():
    dts = np.geomspace(1e-6, 10, 200)
    vals = parametric_ix_two_state(1.0, 2.0, dts)
    assert np.all(vals > 0) and np.all(np.diff(vals) < 0)
    assert vals[0] == pytest.approx(two_state_coeffs(1.0, 2.0).c00, abs=1e-4)


def test_expansion_remainder_is_little_o_of_dt():
    c = two_state_coeffs(1.0, 2.0)
    ratios = [abs(parametric_ix_two_state(1.0, 2.0, dt) - float(c.evaluate(dt))) / dt
              for dt in (1e-2, 1e-3, 1e-4, 1e-5)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1e-3


def test_rate_scaling():
    kp, km, alpha = 1.0, 2.0, 3.0
    base, scaled = two_state_coeffs(kp, km), two_state_coeffs(alpha * kp, alpha * km)
    assert scaled.c00 == pytest.approx(base.c00)
    assert scaled.c11 == pytest.approx(alpha * base.c11)
    assert scaled.c10 == pytest.approx(alpha * base.c10 + alpha * math.log(alpha) * base.c11)
    assert parametric_ix_two_state(alpha * kp, alpha * km, 0.1) == pytest.approx(
        parametric_ix_two_state(kp, km, alpha * 0.1))


def test_exact_synthetic_recovery():
    truth = CoefficientSet(c00=0.7, c01=-0.25, c10=1.3, c11=-0.4)
    fit = fit_asymptotic_coeffs(sample_grid(truth.evaluate, 1e-4, 1e-1, 30))
    for name in ("c00", "c01", "c10", "c11"):
        assert getattr(fit, name) == pytest.approx(getattr(truth, name), rel=1e-8)
    assert fit.residual < 1e-10
    assert fit.instantaneous_divergent and fit.rate_divergent


def test_fit_flags_use_relative_zero():
    truth = CoefficientSet(c00=0.7, c01=0.0, c10=1.3, c11=0.0)
    fit = fit_asymptotic_coeffs(sample_grid(truth.evaluate, 1e-4, 1e-1, 30))
    assert not fit.instantaneous_divergent and not fit.rate_divergent


def test_fit_input_errors():
    good = sample_grid(lambda d: 1.0 + d, 1e-4, 1e-1, 20)
    with pytest.raises(InsufficientDataError):
        fit_asymptotic_coeffs(good[:5])
    with pytest.raises(InsufficientDataError):
        fit_asymptotic_coeffs(sample_grid(lambda d: d, 1e-2, 5e-2, 20))
    with pytest.raises(ConditioningError):
        fit_asymptotic_coeffs(good, max_condition=10.0)
    with pytest.raises(ParameterError):
        fit_asymptotic_coeffs([(-1.0, 0.0)] + good)


def test_missing_basis_term_warns():
    f = lambda d: 1.0 + d * d * math.log(d) * 50
    with pytest.warns(RuntimeWarning, match="basis"):
        fit_asymptotic_coeffs(sample_grid(f, 1e-4, 1e-1, 30))


def test_coefficient_set_validation_and_spiking_limit():
    s = spiking_coeffs(1.5)
    assert s.rate_divergent and not s.instantaneous_divergent
    assert s.as_dict()["c10"] == {"divergent": True, "sign": "+"}
    assert s.c11 == 3.0
    with pytest.raises(ParameterError):
        s.evaluate(0.1)
    with pytest.raises(ParameterError):
        CoefficientSet(c10=1.0, divergent={"c10"})
    with pytest.raises(ParameterError):
        CoefficientSet(c00=math.nan)
    with pytest.raises(ParameterError):
        spiking_coeffs(-1.0)


def test_model_validation():
    with pytest.raises(ParameterError):
        MasterEqModel(("a",), {})
    with pytest.raises(ParameterError):
        MasterEqModel(("a", "b"), {("a", "a"): 1.0})
    with pytest.raises(ParameterError):
        stationary_distribution(MasterEqModel(("a", "b"), {("a", "b"): 1.0}))
    with pytest.raises(ParameterError):
        parametric_ix_two_state(0.0, 1.0, 0.1)

"""Pathwise information dynamics for continuous-time point processes and diffusions."""

__version__ = "0.1.0"

from .exceptions import (BinningError, ConditioningError, CtinfoError, DivergenceError,
                         DomainError, ImpossibleEventError, InsufficientDataError,
                         NonEquivalentMeasuresError, NumericalError, NumericalInstabilityError,
                         ParameterError, SimulationError, SingularParameterError, ValidationError)
from .paths import (EventPath, InfoTrace, IntensityTrace, SamplePath, StatePath, TimeWindow,
                    time_since_last_event, verify_trace_consistency)
from .simulate import (FIG2_PARAMS, CoupledSpikingParams, EventDrivenParams, PhaseDistribution,
                       RefractoryParams, make_rng, run_ensemble, simulate_coupled_spiking,
                       simulate_event_driven, simulate_poisson, simulate_refractory,
                       simulate_thinning)
from .filtering import (FilterRun, FilterState, filter_predict, filter_update_at_x_spike,
                        marginal_intensity_trace, run_coupled_filter)
from .intensities import (coupled_conditional_trace, coupled_markov_curve, coupled_markov_rate,
                          coupled_markov_trace, event_driven_traces, refractory_intensity_trace,
                          refractory_truncated_trace)
from .infomeasures import (RateEstimate, binned_storage_demo, binned_storage_estimate,
                           discrete_storage_decomposition, elusive_information, ergodic_memory_rate,
                           ergodic_rate, ergodic_transfer_rate, pathwise_decomposition,
                           pathwise_memory, pathwise_transfer, refractory_truncated_rate,
                           truncated_memory_rate)
from .closedform import (EventDrivenReport, event_driven_report, phase_recovery,
                         refractory_closed_forms, refractory_memory_rate, xi_integral)
from .oudyn import (OUParams, critical_noise, effective_sample_size, fig3_params,
                    girsanov_accumulator, girsanov_ensemble, kappa_eff, memory_rate_coupled_ou,
                    ou_asymptotic_coeffs, ou_parametric_ais, ou_rates, ou_sweep,
                    simulate_coupled_ou, stationary_covariance, sum_rate_coupled_ou,
                    te_rate_coupled_ou)
from .icap import (CoefficientSet, MasterEqModel, fit_asymptotic_coeffs, master_eq_coeffs,
                   parametric_ix_two_state, sample_grid, spiking_coeffs, two_state_coeffs)

__all__ = [name for name, obj in dict(globals()).items()
           if not name.startswith("_") and not isinstance(obj, type(__import__("sys")))]

"""Reading divergences off the small-lag expansion of the lagged mutual information.

The mutual information between a process and itself a lag ``dt`` later is
fitted to ``c00 + c01 ln dt + c10 dt + c11 dt ln dt``. A nonzero ``c01``
signals an instantaneous divergence (continuous diffusions); a nonzero
``c11`` signals a divergent naive storage rate (jump processes).
"""

import warnings

from ctinfo import (fit_asymptotic_coeffs, ou_asymptotic_coeffs, ou_parametric_ais,
                    parametric_ix_two_state, sample_grid, two_state_coeffs)


def show(label, truth, fit):
    print(label)
    for name in ("c00", "c01", "c10", "c11"):
        print(f"  {name}: closed form {getattr(truth, name):+.6f}   fit {getattr(fit, name):+.6f}")
    print(f"  instantaneous part diverges: {fit.instantaneous_divergent}; "
          f"rate diverges: {fit.rate_divergent}\n")


kappa = 1.0
ou_fit = fit_asymptotic_coeffs(sample_grid(lambda d: ou_parametric_ais(kappa, d), 1e-5, 1e-3))
show("scalar OU process, kappa = 1", ou_asymptotic_coeffs(kappa), ou_fit)

with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    two_fit = fit_asymptotic_coeffs(sample_grid(lambda d: parametric_ix_two_state(1.0, 2.0, d), 1e-5, 1e-3))
show("two-state jump process, k+ = 1, k- = 2", two_state_coeffs(1.0, 2.0), two_fit)
print("The two-state fit misses c10 by several percent: the next term of the true")
print("expansion is dt^2 ln dt, which the four-term basis cannot absorb.")

"""How much memory does a refractory period buy?

A Poisson neuron that falls silent for ``delta_x`` after every spike has a
full-history intensity of either 0 or ``mu``. Its history-free (Markov)
description fires at the mean rate ``mu / (1 + mu delta_x)``. The gap
between the two is the active memory utilisation rate. This script compares
the closed form with a simulated estimate and shows where it peaks.
"""

import math

import numpy as np

from ctinfo import (IntensityTrace, RefractoryParams, TimeWindow, elusive_information,
                    ergodic_memory_rate, refractory_closed_forms, refractory_intensity_trace,
                    refractory_memory_rate, simulate_refractory)

mu = 1.0
grid = np.linspace(0.0, 5.0, 11)
print("delta_x   closed form   simulated (T = 2e4)")
for dx in grid[1:]:
    p = RefractoryParams(mu, float(dx))
    x = simulate_refractory(p, TimeWindow(0.0, 2e4), seed=1)
    lam0 = IntensityTrace.constant(refractory_closed_forms(mu, dx)["lambda0"], x.window)
    est = ergodic_memory_rate(x, refractory_intensity_trace(x, p), lam0, burn_in=100.0)
    print(f"{dx:7.2f}   {float(refractory_memory_rate(mu, dx)):11.5f}   "
          f"{est.value:9.5f} +/- {est.stderr:.5f}")

cf = refractory_closed_forms(mu, math.e - 1.0)
print(f"\nthe rate peaks at delta_x = e - 1 = {cf['argmax_delta_x']:.4f} with value mu/e = {cf['max_rate']:.5f}")

# Cutting the remembered history to the last s seconds loses some of that
# memory. Integrating the loss over s gives the elusive information.
p = RefractoryParams(1.0, 1.0)
print(f"elusive information at mu = delta_x = 1: {elusive_information(p):.6f} nats")

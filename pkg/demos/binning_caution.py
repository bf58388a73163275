"""What a binned storage estimate actually measures.

Binning a spike train at width ``dt`` and computing the plug-in mutual
information between the next bin and the last ``k`` bins, divided by
``dt``, looks like an active-storage rate. As ``dt`` shrinks with the
history span held fixed, it converges instead to the memory rate of the
continuous-time process.
"""

import math

from ctinfo import (RefractoryParams, TimeWindow, binned_storage_demo, refractory_closed_forms,
                    simulate_refractory)

p = RefractoryParams(1.0, 1.0)
target = refractory_closed_forms(p.mu, p.delta_x)["M_rate"]
x = simulate_refractory(p, TimeWindow(0.0, 2e5), seed=12)
rows = binned_storage_demo(x, [0.5, 0.25, 0.1, 0.05], history_span=2.0)
print(f"memory rate of the process: {target:.4f} nats/s (ln 2 / 2 = {math.log(2) / 2:.4f})")
print("   dt    naive binned estimate")
for dt, val in rows:
    print(f"{dt:5.2f}    {val:.4f}")

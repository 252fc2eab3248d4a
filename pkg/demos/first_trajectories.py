"""Integrate a handful of guided trajectories and render their pattern.

Two starts inside the main blob at moderate entanglement: one stays on
an ordered loop, the other wanders chaotically after node encounters.
The cumulative visit pattern of both is written next to this script as
a small image.
"""
import os

import numpy as np

from bohmqubits.integrate import IntegratorConfig, integrate
from bohmqubits.params import WaveParams
from bohmqubits.patterns import PatternGrid, accumulate, merge, render

params = WaveParams.from_c2(0.2)
cfg = IntegratorConfig(t_final=200.0)

starts = [(3.5355, -2.6865),     # main blob center, ordered
          (-2.52027, 2.17529)]   # chaotic wanderer

grids = []
for x0, y0 in starts:
    rec = integrate(params, (x0, y0), cfg)
    r = np.hypot(rec.positions[:, 0], rec.positions[:, 1])
    print(f"start ({x0:+.4f}, {y0:+.4f}): flag={rec.flag}, "
          f"{rec.stats['n_accepted']} accepted / "
          f"{rec.stats['n_rejected']} rejected steps, "
          f"radius range [{r.min():.2f}, {r.max():.2f}], "
          f"min density {rec.stats['min_density']:.2e}")
    g = PatternGrid.empty(cfg.sample_dt, t_range=(0.0, cfg.t_final))
    accumulate(g, rec)
    grids.append(g)

both = merge(grids[0], grids[1])
out = os.path.join(os.path.dirname(__file__), "first_trajectories.ppm")
render(both, out)
print(f"\ncumulative pattern of both runs: {out} "
      f"({both.total} samples, {np.count_nonzero(both.counts)} cells hit)")

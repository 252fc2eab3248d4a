"""Sanity tour of the analytic layer.

Evaluates the entangled two-oscillator state at a few points, confirms
it solves its Schrodinger equation to round-off, and prints where the
two probability blobs sit over half a period of the slow axis.
"""
import numpy as np

from bohmqubits.params import WaveParams
from bohmqubits.wavefunction import (blob_centers, continuity_residual,
                                     density, eval_psi,
                                     schrodinger_residual)

params = WaveParams.from_c2(0.5)
print(f"state: c1={params.c1:.4f}, c2={params.c2:.4f}, "
      f"omega_x={params.omega_x}, omega_y={params.omega_y:.4f}, "
      f"a0={params.a0}")

rng = np.random.default_rng(1)
x = rng.uniform(-8, 8, 200)
y = rng.uniform(-8, 8, 200)
t = rng.uniform(0, 10, 200)
# keep points with some support; the velocity field is guarded near zeros
live = density(params, x, y, t) > 1e-12
x, y, t = x[live], y[live], t[live]
print(f"max |psi| on {len(x)} random points: "
      f"{np.max(np.abs(eval_psi(params, x, y, t))):.4f}")
print(f"max Schrodinger residual:      "
      f"{np.max(schrodinger_residual(params, x, y, t)):.2e}")
print(f"max continuity residual:       "
      f"{np.max(continuity_residual(params, x, y, t)):.2e}")

print("\nblob centers over half a slow period:")
for tt in np.linspace(0.0, np.pi, 5):
    main, sec = blob_centers(params, tt)
    rho_main = density(params, main[0], main[1], tt)
    print(f"  t={tt:5.3f}  main=({main[0]:+7.4f}, {main[1]:+7.4f}) "
          f"rho={float(rho_main):.4f}   secondary=({sec[0]:+7.4f}, "
          f"{sec[1]:+7.4f})")

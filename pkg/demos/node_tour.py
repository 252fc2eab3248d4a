"""Walk the nodal lattice of the entangled state through one beat.

The zeros of the wavefunction form a moving, rotating lattice of point
nodes. This prints the lattice frame (spacing, inclination, distance
from the origin) at a few times, locates the unstable X-point that
accompanies one node, and then lists the collision epochs where the
node lattice sweeps the bulk of the probability density.
"""
import numpy as np

from bohmqubits.errors import XPointNotFound
from bohmqubits.nodes import (collision_epochs, find_x_point,
                              lattice_frame, min_origin_distance,
                              node_position, nodes_at, spacing_minima)
from bohmqubits.params import WaveParams

params = WaveParams.from_c2(0.2)

print("lattice frame:")
for t in (0.5, 1.5, 2.5, 4.0):
    fr = lattice_frame(params, t)
    angle = np.degrees(np.arctan(fr.inclination))
    print(f"  t={t:4.1f}  spacing={fr.spacing:7.4f}  "
          f"line angle={angle:7.2f} deg  "
          f"d_origin={fr.origin_distance:8.4f}")
print(f"closed-form floor on the origin distance: "
      f"{min_origin_distance(params):.4f}")

print("\nnodes near the window center at t=2.0:")
nodes = nodes_at(params, 2.0, (-4, 4))
for node in nodes:
    print(f"  k={node.k:+d}  ({node.position.x:+9.4f}, "
          f"{node.position.y:+9.4f})  parity={node.parity}")

# every node drags a hyperbolic partner point; show one
node = next(n for n in nodes if n.k == 1)
try:
    xp = find_x_point(params, node)
    print(f"\nX-point of node k={node.k}: ({xp.position.x:+.4f}, "
          f"{xp.position.y:+.4f}), eigenvalues "
          f"{xp.eigenvalues[0]:+.3f}, {xp.eigenvalues[1]:+.3f}")
except XPointNotFound as err:
    print(f"\nno X-point resolved here: {err}")

print("\nspacing minima in [0, 10] (lattice at its densest):")
for t, s in spacing_minima(params, 10.0):
    print(f"  t={t:6.4f}  spacing={s:7.4f}")

print("\ncollision epochs in [0, 10] (envelope above threshold):")
for ep in collision_epochs(params, 10.0):
    print(f"  [{ep.t_start:6.3f}, {ep.t_end:6.3f}]  peak at "
          f"t={ep.t_peak:6.3f}, envelope {ep.envelope_peak:.4f}")

"""Two chaotic trajectories forget where they started.

Each run covers t = 3000 here (about half a minute); over 1e5 and
longer the same curve keeps falling, which is the single-trajectory
version of the ensemble relaxation in born_convergence.py.
"""
from bohmqubits.integrate import IntegratorConfig
from bohmqubits.params import WaveParams
from bohmqubits.patterns import distance_curve, single_pattern

params = WaveParams.from_c2(0.2)
checkpoints = (300.0, 1000.0, 3000.0)
cfg = IntegratorConfig(t_final=3000.0)

grids = []
for start in ((-2.52027, 2.17529), (2.0, -2.0)):
    g, report = single_pattern(params, start, checkpoints, cfg)
    print(f"start {start}: {report['flag']}, "
          f"{g[-1].total} pattern samples")
    grids.append(g)

print("\ndistance between the two visit patterns (mass-normalized):")
for t, d in distance_curve(grids[0], grids[1], normalization="unit_mass"):
    print(f"  t={t:6.0f}  D={d:.5f}")

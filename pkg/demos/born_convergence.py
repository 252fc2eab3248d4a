"""Two independent Born ensembles build the same visit pattern.

Shrunk to 150 particles and t = 60 so it runs in about a minute; the
full-size runs (2400 particles, t = 500) show the same decay with a
much lower floor.
"""
from bohmqubits.integrate import IntegratorConfig
from bohmqubits.params import WaveParams
from bohmqubits.patterns import distance_curve, ensemble_patterns
from bohmqubits.sampling import sample_born

params = WaveParams.from_c2(0.5)
checkpoints = (15.0, 30.0, 60.0)
cfg = IntegratorConfig(t_final=60.0)

grids = []
for seed in (1, 2):
    pset = sample_born(params, 150, seed=seed)
    g, report = ensemble_patterns(params, pset.points, checkpoints, cfg)
    print(f"ensemble seed={seed}: {report['n_aborted_near_node']} aborted, "
          f"{g[-1].total} samples accumulated by t={checkpoints[-1]:.0f}")
    grids.append(g)

print("\ndistance between the two cumulative patterns:")
for t, d in distance_curve(grids[0], grids[1]):
    print(f"  t={t:5.0f}  D={d:.4f}")
print("shrinking D means both ensembles trace out the same pattern")

"""Classify a small Born sample as ordered or chaotic, two ways.

The cheap classifier watches for escape from the box that bounds every
ordered orbit. The expensive one integrates a deviation vector and
reads off the stretching exponent. They agree on almost every draw,
and the chaotic fraction b ties the ordered/chaotic populations to the
blob weights through an exact identity, checked here on the sample.
"""
import time

from bohmqubits.chaos import (classify_escape_batch, classify_lcn_batch,
                              escape_box, proportion_report,
                              ratio_identity_residual)
from bohmqubits.params import WaveParams
from bohmqubits.sampling import sample_born

params = WaveParams.from_c2(0.2)
box = escape_box(params, 0.0, 0.0)
print(f"escape box around a start at the origin: "
      f"x in [{box[0]:+.2f}, {box[1]:+.2f}], "
      f"y in [{box[2]:+.2f}, {box[3]:+.2f}]")

pset = sample_born(params, 60, seed=12)
t0 = time.perf_counter()
esc = classify_escape_batch(params, pset.points, horizon=500.0)
print(f"escape classification of 60 draws: "
      f"{time.perf_counter() - t0:.1f}s")

rep = proportion_report(pset, esc)
print(f"  blob weights p1={rep.p1:.3f} p2={rep.p2:.3f}; "
      f"chaotic fraction of the main blob b={rep.b:.3f}")
print(f"  ordered/chaotic split P_or={rep.P_or:.3f} P_ch={rep.P_ch:.3f} "
      f"ratio={rep.ratio:.3f}")
print(f"  identity residual: {ratio_identity_residual(rep):.2e}")

# cross-check a few draws with the deviation-vector exponent
sub = pset.points[:8]
t0 = time.perf_counter()
lcn = classify_lcn_batch(params, sub, horizon=2000.0)
print(f"\ndeviation-vector check on 8 draws: "
      f"{time.perf_counter() - t0:.1f}s")
agree = 0
for i, (a, b) in enumerate(zip(esc[:8], lcn)):
    chi = f"{b.chi_final:.2e}" if b.chi_final is not None else "n/a"
    esc_t = f"{a.escape_time:.1f}" if a.escape_time is not None else "never"
    mark = "==" if a.label == b.label else "!="
    agree += a.label == b.label
    print(f"  #{i}: escape says {a.label:9s} (t_esc={esc_t:>6s}) {mark} "
          f"stretch says {b.label:9s} (chi={chi})")
print(f"agreement: {agree}/8")

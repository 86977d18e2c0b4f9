"""Trade detections for false positives by sweeping the sparsity weight.

The decomposition splits each committee's count matrix into a smooth part
and spikes; the weight on the spike term is C/sqrt(max dimension). Raising
C makes spikes expensive, so fewer bins vote. The sweep reuses the
election stage and repeats only the cheap half of the pipeline.
"""

from flowsenate import synth
from flowsenate.evaluate import Method, RocPoint, score
from flowsenate.flows import Heuristic
from flowsenate.pipeline import sweep_sparsity

spec = synth.mixed_scenario(n_scans=6, n_dos=3, n_ddos=3,
                            duration_bins=96, flows_per_bin=5000, seed=5)
table, truths = synth.generate(spec)
print(f"trace: {len(table)} flows, {len(truths)} injected attacks\n")

grid = [1.0, 1.5, 2.0, 2.5, 3.0]
points = sweep_sparsity(table, Heuristic.H1, grid)

print(f"{'C':>4}  {'lambda':>7}  {'flagged':>7}  {'detected':>8}  "
      f"{'false pos':>9}")
roc = []
for pt in points:
    lam = max(pt.lam_by_feature.values())
    card = score(pt.diagnoses, truths, Method.H1)
    roc.append(RocPoint.from_card(pt.sparsity_scale, card))
    print(f"{pt.sparsity_scale:4.1f}  {lam:7.3f}  {len(pt.flagged):7d}  "
          f"{card.detected:8d}  {card.false_positives:9d}")

peak = max(p.detection_rate for p in roc)
frugal = max((p for p in roc if p.detection_rate == peak),
             key=lambda p: p.param_value)
print(f"\nevery grid point detects the same attacks here, so the win from "
      f"raising C is triage:\nat C={frugal.param_value:g} the decision "
      f"stage examines {len(points[grid.index(frugal.param_value)].flagged)} "
      f"bins instead of {len(points[0].flagged)}")
print("raising C further starts dropping real detections; it never adds any back")

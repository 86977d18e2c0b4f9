"""Fit the verdict thresholds from labeled history instead of guessing.

The classifier needs one intensity cutoff per verdict. Given past
diagnoses labeled by an operator, a depth-limited decision tree on the
single intensity axis yields per-class lower bounds; the smallest binding
bound becomes that class's threshold.
"""

import numpy as np

from flowsenate.decision import ThresholdConfig, learn_thresholds
from flowsenate import synth
from flowsenate.evaluate import Method, score
from flowsenate.flows import Heuristic
from flowsenate.pipeline import PipelineConfig, detect

rng = np.random.default_rng(3)

# a plausible operator log: scans are faint, floods demand volume
history = []
history += [(v, "scan") for v in rng.integers(25, 90, size=40)]
history += [(v, "dos") for v in rng.integers(60, 220, size=25)]
history += [(v, "ddos") for v in rng.integers(180, 900, size=25)]
intensities = [float(v) for v, _ in history]
labels = [lab for _, lab in history]

learned = learn_thresholds(intensities, labels)
print("bootstrap thresholds:", ThresholdConfig())
print("learned thresholds:  ", learned)

spec = synth.ScenarioSpec(
    duration_bins=96, flows_per_bin=5000, seed=42,
    injections=(
        synth.InjectionSpec(synth.AttackKind.SCAN, 30, 180),
        synth.InjectionSpec(synth.AttackKind.DOS, 55, 70),
        synth.InjectionSpec(synth.AttackKind.DDOS, 80, 320),
    ),
)
table, truths = synth.generate(spec)

for name, thresholds in (("bootstrap", ThresholdConfig()),
                         ("learned", learned)):
    run = detect(table, Heuristic.H1, PipelineConfig(thresholds=thresholds))
    card = score(run.diagnoses, truths, Method.H1)
    verdicts = {d.bin_index: d.verdict.value for d in run.diagnoses
                if d.intensity > 0}
    print(f"\n{name}: detection {card.detection_rate:.2f}, "
          f"false-positive {card.false_positive_rate:.2f}")
    print(f"  verdicts: {verdicts}")

print("\nwith history that overlaps (scans up to 90, floods from 60) the "
      "tree places the\ncutoffs where the classes actually separate rather "
      "than at round numbers")

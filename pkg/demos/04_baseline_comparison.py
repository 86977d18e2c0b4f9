"""Pit the histogram-change baseline against the committee pipeline.

The baseline hashes each feature into 64 buckets per bin, alarms when the
bucket distribution drifts from the previous bin on all four features,
then explains alarmed bins by frequent-itemset mining. The two detectors
have complementary blind spots: the committee pipeline only examines
small flows, so a bulky flood passes right through its filters, while the
change detector needs a bin's distributions to move, so a 70-flow pair
flood drowns in background churn.
"""

from flowsenate import synth
from flowsenate.baseline import run_baseline
from flowsenate.evaluate import Method, score, union_scorecard
from flowsenate.flows import Heuristic, bin_indices
from flowsenate.pipeline import detect

spec = synth.ScenarioSpec(
    duration_bins=96, flows_per_bin=5000, seed=42,
    injections=(
        synth.InjectionSpec(synth.AttackKind.SCAN, 30, 180),
        synth.InjectionSpec(synth.AttackKind.DOS, 55, 70),
        synth.InjectionSpec(synth.AttackKind.DDOS, 80, 2500,
                            synth.Sizing.LARGE),
    ),
)
table, truths = synth.generate(spec)
bins, _, n_bins = bin_indices(table, spec.bin_width)

result = run_baseline(table, bins, n_bins)
print(f"[apriori] alarmed bins: {result.alarmed_bins}")
for d in result.diagnoses:
    print(f"    bin {d.bin_index:3d} -> {d.verdict.value} "
          f"(intensity {d.intensity})")
for t, pats in result.patterns.items():
    if pats:
        items, support = pats[0]
        pretty = ", ".join(f"{f}={v}" for f, v in sorted(items))
        print(f"    bin {t}: dominant pattern [{pretty}] x{support}")

h1 = detect(table, Heuristic.H1)
h2 = detect(table, Heuristic.H2)

print()
cards = [
    score(result.diagnoses, truths, Method.APRIORI),
    union_scorecard(h1.diagnoses, h2.diagnoses, truths),
]
for card in cards:
    print(f"{card.method.value:8s} detection {card.detection_rate:.2f}  "
          f"false-positive {card.false_positive_rate:.2f}  "
          f"alarms {card.alarms_raised}")

print("\nthe bulky flood never enters the committee pipeline (its flows fail "
      "both small-flow\nfilters) but lights up the change detector; the "
      "70-flow pair flood does the reverse")

"""Scoring of diagnoses against ground truth, plus report serialization.

An alarm is a diagnosis that names an attack; bins the decision stage
cleared as benign are not alarms and never count against the false-positive
rate. Detection is strict by default: an alarm must name both the right bin
and the right attack kind to count. A lenient mode credits bin-only matches
for debugging.

The false-positive rate is measured against alarms raised (wrong alarms
divided by all alarms), not against the number of bins, so a detector that
stays quiet scores 0.0 with an explicit flag rather than dividing by zero.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .decision import Diagnosis, Verdict
from .synth import TruthRecord

ATTACK_KINDS = ("ddos", "dos", "scan")


class Method(enum.Enum):
    H1 = "h1"
    H2 = "h2"
    UNION = "union"
    APRIORI = "apriori"


@dataclass(frozen=True)
class ScoreCard:
    method: Method
    detection_rate: float
    false_positive_rate: float
    detected: int
    truth_total: int
    false_positives: int
    alarms_raised: int
    per_type: Mapping[str, tuple[int, int]]
    no_alarms: bool = False
    lenient: bool = False
    params: Mapping[str, object] = field(default_factory=dict)


def alarm_pairs(diagnoses: Iterable[Diagnosis]) -> set[tuple[int, str]]:
    """(bin, kind) for every attack verdict; cleared bins contribute nothing."""
    return {(d.bin_index, d.verdict.value) for d in diagnoses
            if d.verdict is not Verdict.FALSE_POSITIVE}


def truth_pairs(truth: Iterable) -> set[tuple[int, str]]:
    """Normalize ground truth to (bin, kind) pairs.

    Accepts TruthRecord instances or plain (bin, kind) tuples.
    """
    out = set()
    for item in truth:
        if isinstance(item, TruthRecord):
            out.add((item.bin_index, item.kind.value))
        else:
            b, k = item
            out.add((int(b), str(k)))
    return out


def score_alarms(alarms: set[tuple[int, str]], truth: set[tuple[int, str]],
                 method: Method | str, lenient: bool = False,
                 params: Mapping[str, object] | None = None) -> ScoreCard:
    if not isinstance(method, Method):
        method = Method(str(method))
    if lenient:
        truth_bins = {b for b, _ in truth}
        alarm_bins = {b for b, _ in alarms}
        detected_truth = {tv for tv in truth if tv[0] in alarm_bins}
        false_alarms = {av for av in alarms if av[0] not in truth_bins}
    else:
        detected_truth = truth & alarms
        false_alarms = alarms - truth

    per_type = {}
    for kind in ATTACK_KINDS:
        total_k = sum(1 for _, k in truth if k == kind)
        det_k = sum(1 for _, k in detected_truth if k == kind)
        per_type[kind] = (det_k, total_k)

    n_alarms = len(alarms)
    detection_rate = len(detected_truth) / len(truth) if truth else 0.0
    fp_rate = len(false_alarms) / n_alarms if n_alarms else 0.0
    return ScoreCard(
        method=method,
        detection_rate=detection_rate,
        false_positive_rate=fp_rate,
        detected=len(detected_truth),
        truth_total=len(truth),
        false_positives=len(false_alarms),
        alarms_raised=n_alarms,
        per_type=per_type,
        no_alarms=(n_alarms == 0),
        lenient=lenient,
        params=dict(params or {}),
    )


def score(diagnoses: Iterable[Diagnosis], truth: Iterable, method: Method | str,
          lenient: bool = False,
          params: Mapping[str, object] | None = None) -> ScoreCard:
    return score_alarms(alarm_pairs(diagnoses), truth_pairs(truth), method,
                        lenient=lenient, params=params)


def union_scorecard(diagnoses_a: Iterable[Diagnosis], diagnoses_b: Iterable[Diagnosis],
                    truth: Iterable, lenient: bool = False,
                    params: Mapping[str, object] | None = None) -> ScoreCard:
    """Merge two diagnosis streams by alarm-set union before scoring.

    A wrong alarm raised by either stream stays in the union, so combining
    detectors can only add false positives, never hide them.
    """
    merged = alarm_pairs(diagnoses_a) | alarm_pairs(diagnoses_b)
    return score_alarms(merged, truth_pairs(truth), Method.UNION,
                        lenient=lenient, params=params)


@dataclass(frozen=True)
class RocPoint:
    param_value: float
    detections: int
    false_positives: int
    detection_rate: float
    false_positive_rate: float

    @classmethod
    def from_card(cls, param_value: float, card: ScoreCard) -> "RocPoint":
        return cls(param_value=param_value, detections=card.detected,
                   false_positives=card.false_positives,
                   detection_rate=card.detection_rate,
                   false_positive_rate=card.false_positive_rate)


def card_dict(card: ScoreCard) -> dict:
    return {
        "method": card.method.value,
        "params": dict(card.params),
        "per_type": {k: {"detected": d, "total": t} for k, (d, t) in card.per_type.items()},
        "detection_rate": card.detection_rate,
        "false_positive_rate": card.false_positive_rate,
        "detected": card.detected,
        "truth_total": card.truth_total,
        "false_positives": card.false_positives,
        "alarms_raised": card.alarms_raised,
        "no_alarms": card.no_alarms,
        "lenient": card.lenient,
    }


def report_dict(card: ScoreCard, roc: Sequence[RocPoint] | None = None,
                config_hash: str | None = None) -> dict:
    out = card_dict(card)
    out["roc"] = [
        {"param_value": p.param_value, "detections": p.detections,
         "false_positives": p.false_positives, "detection_rate": p.detection_rate,
         "false_positive_rate": p.false_positive_rate}
        for p in (roc or [])
    ]
    if config_hash is not None:
        out["config_hash"] = config_hash
    return out


def dump_report(obj: Mapping) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_report(path, obj: Mapping) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_report(obj))

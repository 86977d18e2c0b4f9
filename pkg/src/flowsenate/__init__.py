"""Detection and diagnosis of anomalous time bins in sampled flow traces.

The pipeline filters a trace down to small flows, elects each feature's
recurring heavy values into a committee, separates the committee's per-bin
count matrix into low-rank routine plus sparse surprise, lets strictly
positive surprises vote, and classifies bins where all four features agree
into denial-of-service, distributed denial-of-service, or scan verdicts.

Entry points: `pipeline.detect` for library use, the `flowsenate` console
script for files, `synth.generate` for reproducible test traffic, and
`baseline.run_baseline` for the histogram-change comparison detector.
"""

__version__ = "0.1.0"

from .baseline import BaselineConfig, BaselineResult, mine_frequent, run_baseline
from .decision import (Diagnosis, ThresholdConfig, Verdict, Witness, classify,
                       learn_thresholds)
from .election import ElectionConfig, run_election, tail_norm_bound
from .evaluate import Method, RocPoint, ScoreCard, score, union_scorecard
from .flows import (ALL_FEATURES, FeatureKind, FlowRecord, FlowTable, Heuristic,
                    PrefilterConfig, read_trace_table)
from .pcp import PcpConfig, PcpDecomposition, default_lambda, pcp_decompose
from .pipeline import DetectionRun, PipelineConfig, detect, detect_both, sweep_sparsity
from .synth import AttackKind, InjectionSpec, ScenarioSpec, TruthRecord, generate
from .voting import require_all_features, require_at_least, run_voting

__all__ = [
    "__version__",
    "ALL_FEATURES", "AttackKind", "BaselineConfig", "BaselineResult",
    "Diagnosis", "DetectionRun", "ElectionConfig",
    "FeatureKind", "FlowRecord", "FlowTable", "Heuristic", "InjectionSpec",
    "Method", "PcpConfig", "PcpDecomposition", "PipelineConfig", "PrefilterConfig",
    "RocPoint", "ScenarioSpec", "ScoreCard", "ThresholdConfig", "TruthRecord",
    "Verdict", "Witness", "classify", "default_lambda", "detect", "detect_both",
    "generate", "learn_thresholds", "mine_frequent", "pcp_decompose",
    "read_trace_table", "require_all_features", "require_at_least",
    "run_baseline", "run_election", "run_voting",
    "score", "sweep_sparsity", "tail_norm_bound", "union_scorecard",
]

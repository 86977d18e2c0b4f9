"""End-to-end batch detection: filter, elect, vote, diagnose.

One run works a whole trace at a fixed small-flow filter (packet-count or
byte-count). Bin boundaries always come from the unfiltered trace so runs
under different filters, and the ground truth, agree on bin numbering.
The two filters are complementary views of the same traffic; merging their
alarm sets is the evaluator's job (see evaluate.union_scorecard).

A sweep over the sparsity scale reuses the election stage, which depends
only on the trace and the committee size, and repeats voting and diagnosis
per grid point.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .decision import Diagnosis, ThresholdConfig, classify_bin_arrays
from .election import ElectionConfig, FeatureElection, run_election
from .flows import (ALL_FEATURES, FeatureKind, FlowTable, Heuristic,
                    PrefilterConfig, bin_indices, prefilter_mask)
from .pcp import PcpConfig, default_lambda
from .voting import FeatureVotes, flagged_bins, run_voting


@dataclass(frozen=True)
class PipelineConfig:
    bin_width: int = 900
    top_k: int = 20
    sparsity_scale: float = 2.0            # numerator of the sparsity weight
    lambda_override: float | None = None   # takes precedence over the scale
    alpha: int = 3                         # packet cap for the H1 filter
    beta: int = 64                         # byte cap for the H2 filter
    min_features: int = 4
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    normalize_columns: bool = False        # scale each committee column to [0, 1]
    intensity_on_raw: bool = False         # diagnose over unfiltered traffic
    pcp_tol: float = 1e-7
    pcp_max_iters: int = 500

    def pcp_config(self) -> PcpConfig:
        return PcpConfig(C=self.sparsity_scale, lambda_override=self.lambda_override,
                         tol=self.pcp_tol, max_iters=self.pcp_max_iters)

    def prefilter_config(self, heuristic: Heuristic) -> PrefilterConfig:
        return PrefilterConfig(heuristic=heuristic, alpha=self.alpha, beta=self.beta)

    def params(self, heuristic: str | None = None) -> dict:
        """Flat parameter echo for reports; λ is echoed instead of the scale
        when an override is set."""
        out: dict[str, object] = {
            "bin_width": self.bin_width,
            "top_k": self.top_k,
            "alpha": self.alpha,
            "beta": self.beta,
            "min_features": self.min_features,
            "threshold_ddos": self.thresholds.ddos,
            "threshold_dos": self.thresholds.dos,
            "threshold_scan": self.thresholds.scan,
            "thresholds_learned": self.thresholds.learned,
            "normalize_columns": self.normalize_columns,
            "intensity_on_raw": self.intensity_on_raw,
        }
        if self.lambda_override is not None:
            out["lambda"] = self.lambda_override
        else:
            out["sparsity_scale"] = self.sparsity_scale
        if heuristic is not None:
            out["heuristic"] = heuristic
        return out


@dataclass
class DetectionRun:
    heuristic: Heuristic
    n_bins: int
    bin_width: int
    trace_start: int
    filtered_flows: int
    flagged: list[int]
    diagnoses: list[Diagnosis]
    elections: dict[FeatureKind, FeatureElection]
    votes: dict[FeatureKind, FeatureVotes]


def _scale_columns(counts: np.ndarray) -> np.ndarray:
    if counts.size == 0:
        return counts
    peak = counts.max(axis=0)
    return counts / np.maximum(peak, 1.0)


class _BinSlicer:
    """Stable bin-sorted view of a table for contiguous per-bin slices."""

    def __init__(self, table: FlowTable, bins: np.ndarray):
        self.table = table
        self.order = np.argsort(bins, kind="stable")
        self.sorted_bins = bins[self.order]

    def rows(self, bin_index: int) -> np.ndarray:
        lo = int(np.searchsorted(self.sorted_bins, bin_index, side="left"))
        hi = int(np.searchsorted(self.sorted_bins, bin_index, side="right"))
        return self.order[lo:hi]


def diagnose_flagged(table: FlowTable, bins: np.ndarray, flagged: Sequence[int],
                     senators: Mapping[FeatureKind, np.ndarray],
                     thresholds: ThresholdConfig) -> list[Diagnosis]:
    """Run the three-step classifier on each flagged bin's traffic slice."""
    slicer = _BinSlicer(table, bins)
    out = []
    for t in flagged:
        sel = slicer.rows(int(t))
        out.append(classify_bin_arrays(
            table.src_ip[sel], table.dst_ip[sel],
            table.src_as[sel], table.dst_as[sel],
            table.src_port[sel], table.dst_port[sel],
            senators, thresholds, bin_index=int(t)))
    return out


def detect(table: FlowTable, heuristic: Heuristic,
           cfg: PipelineConfig = PipelineConfig()) -> DetectionRun:
    """Full pass over one trace under one small-flow filter."""
    bins_all, t0, n_bins = bin_indices(table, cfg.bin_width)
    keep = np.flatnonzero(prefilter_mask(table, cfg.prefilter_config(heuristic)))
    filtered = table.take(keep)
    fbins = bins_all[keep]

    elections = run_election(filtered, fbins, n_bins, ElectionConfig(top_k=cfg.top_k))
    if cfg.normalize_columns:
        work = {k: FeatureElection(k, e.senators, _scale_columns(e.counts))
                for k, e in elections.items()}
    else:
        work = elections
    votes = run_voting(work, cfg.pcp_config())
    flagged = flagged_bins(votes, n_bins, cfg.min_features).tolist()

    senators = {k: elections[k].senators for k in ALL_FEATURES}
    if cfg.intensity_on_raw:
        diagnoses = diagnose_flagged(table, bins_all, flagged, senators, cfg.thresholds)
    else:
        diagnoses = diagnose_flagged(filtered, fbins, flagged, senators, cfg.thresholds)

    return DetectionRun(heuristic=heuristic, n_bins=n_bins, bin_width=cfg.bin_width,
                        trace_start=t0, filtered_flows=len(filtered),
                        flagged=flagged, diagnoses=diagnoses,
                        elections=elections, votes=votes)


def detect_both(table: FlowTable,
                cfg: PipelineConfig = PipelineConfig()) -> tuple[DetectionRun, DetectionRun]:
    """One run per small-flow filter, same bin numbering."""
    return detect(table, Heuristic.H1, cfg), detect(table, Heuristic.H2, cfg)


@dataclass
class SweepPoint:
    sparsity_scale: float
    lam_by_feature: dict[FeatureKind, float]
    flagged: list[int]
    diagnoses: list[Diagnosis]


def sweep_sparsity(table: FlowTable, heuristic: Heuristic, grid: Sequence[float],
                   cfg: PipelineConfig = PipelineConfig()) -> list[SweepPoint]:
    """Rerun voting and diagnosis across a sparsity-scale grid.

    Elections are computed once; only the decomposition weight varies.
    Larger scales penalize the sparse component harder, so flagged-bin sets
    shrink (weakly) as the scale grows.
    """
    bins_all, _, n_bins = bin_indices(table, cfg.bin_width)
    keep = np.flatnonzero(prefilter_mask(table, cfg.prefilter_config(heuristic)))
    filtered = table.take(keep)
    fbins = bins_all[keep]
    elections = run_election(filtered, fbins, n_bins, ElectionConfig(top_k=cfg.top_k))
    senators = {k: elections[k].senators for k in ALL_FEATURES}

    points = []
    for scale in grid:
        point_cfg = replace(cfg, sparsity_scale=float(scale), lambda_override=None)
        votes = run_voting(elections, point_cfg.pcp_config())
        flagged = flagged_bins(votes, n_bins, cfg.min_features).tolist()
        diagnoses = diagnose_flagged(filtered, fbins, flagged, senators, cfg.thresholds)
        lams = {k: default_lambda(*elections[k].counts.shape, C=float(scale))
                if elections[k].counts.size else float("nan")
                for k in ALL_FEATURES}
        points.append(SweepPoint(sparsity_scale=float(scale), lam_by_feature=lams,
                                 flagged=flagged, diagnoses=diagnoses))
    return points

"""Command-line front end.

Subcommands: generate, detect, baseline, learn-thresholds, evaluate, roc.
Options resolve in three layers: hard defaults, then a flat key=value
config file (--config), then explicit flags; flags always win. The output
directory comes from --out-dir, falling back to the FLOWSENATE_OUT_DIR
environment variable, then the current directory.

Exit codes: 0 on success, 1 on runtime failure (unreadable data, unwritable
output directory, mismatched inputs), 2 on usage errors (unknown flags,
missing input files).

Every structured output (JSON reports, the thresholds file) embeds a hash
of the fully resolved configuration that produced it, so outputs can be
traced back to their settings and identical settings yield byte-identical
files. The trace and ground-truth CSVs have fixed headers, so generate
writes the hash to a sidecar manifest instead.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .baseline import BaselineConfig, run_baseline
from .decision import Diagnosis, ThresholdConfig, learn_thresholds
from .evaluate import (Method, RocPoint, dump_report, report_dict, score_alarms,
                       truth_pairs)
from .flows import Heuristic, bin_indices, read_trace_table
from .pipeline import DetectionRun, PipelineConfig, detect, detect_both, sweep_sparsity
from .synth import (AttackKind, InjectionSpec, ScenarioSpec, Sizing,
                    generate_files, read_ground_truth)

ENV_OUT_DIR = "FLOWSENATE_OUT_DIR"


class UsageError(Exception):
    """Bad invocation: reported with usage text, exit code 2."""


# ---------------------------------------------------------------- config

def read_kv_config(path) -> dict[str, list[str]]:
    """Flat key = value lines; '#' starts a comment; repeated keys stack."""
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key = value, got {raw.strip()!r}")
            k, v = line.split("=", 1)
            out.setdefault(k.strip(), []).append(v.strip())
    return out


def parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


class Resolver:
    """Flag value if given, else last config-file value, else default."""

    def __init__(self, kv: Mapping[str, list[str]]):
        self.kv = kv

    def get(self, key: str, flag, cast, default):
        if flag is not None:
            return flag
        if key in self.kv:
            raw = self.kv[key][-1]
            return parse_bool(raw) if cast is bool else cast(raw)
        return default


def config_hash(params: Mapping) -> str:
    canon = json.dumps(params, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def resolve_out_dir(flag_value) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get(ENV_OUT_DIR)
    return Path(env) if env else Path(".")


def ensure_out_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise RuntimeError(f"output directory {path} is not writable")
    return path


def require_file(path_str: str, what: str) -> Path:
    p = Path(path_str)
    if not p.is_file():
        raise UsageError(f"{what} not found: {p}")
    return p


# ------------------------------------------------------------- thresholds

def write_thresholds_file(path: Path, thresholds: ThresholdConfig, chash: str) -> None:
    lines = [
        f"config_hash = {chash}",
        f"ddos = {thresholds.ddos!r}",
        f"dos = {thresholds.dos!r}",
        f"scan = {thresholds.scan!r}",
        f"learned = {'true' if thresholds.learned else 'false'}",
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_thresholds_file(path) -> ThresholdConfig:
    kv = read_kv_config(path)
    try:
        return ThresholdConfig(
            ddos=float(kv["ddos"][-1]),
            dos=float(kv["dos"][-1]),
            scan=float(kv["scan"][-1]),
            learned=parse_bool(kv["learned"][-1]) if "learned" in kv else False,
        )
    except KeyError as exc:
        raise ValueError(f"thresholds file {path} is missing key {exc}") from exc


# ----------------------------------------------------------- serialization

def diagnosis_dict(d: Diagnosis) -> dict:
    out: dict[str, object] = {
        "bin": d.bin_index,
        "verdict": d.verdict.value,
        "intensity": d.intensity,
    }
    if d.witness is None:
        out["witness"] = None
    else:
        agg = d.witness.aggregate
        out["witness"] = {
            "aggregate": {"src_as": agg.src_as, "dst_as": agg.dst_as,
                          "src_port": agg.src_port, "dst_port": agg.dst_port},
            "dst_ip": d.witness.dst_ip,
            "src_ip": d.witness.src_ip,
            "dst_port": d.witness.dst_port,
        }
    return out


def run_dict(run: DetectionRun, params: Mapping, chash: str, trace: str) -> dict:
    return {
        "method": run.heuristic.value.lower(),
        "params": dict(params),
        "config_hash": chash,
        "trace": trace,
        "n_bins": run.n_bins,
        "bin_width": run.bin_width,
        "trace_start": run.trace_start,
        "filtered_flows": run.filtered_flows,
        "senators": {k.value: run.elections[k].senators.size for k in run.elections},
        "flagged_bins": list(run.flagged),
        "diagnoses": [diagnosis_dict(d) for d in run.diagnoses
                      if d.verdict.value != "false_positive"],
        "cleared_bins": [d.bin_index for d in run.diagnoses
                         if d.verdict.value == "false_positive"],
    }


def write_json(path: Path, obj: Mapping) -> None:
    path.write_text(dump_report(obj), encoding="utf-8")


# ------------------------------------------------------------- generate

_SIZING = {s.value: s for s in Sizing}
_KINDS = {k.value: k for k in AttackKind}


def parse_injection(text: str) -> InjectionSpec:
    """kind,bin,intensity[,sizing] e.g. 'scan,41,220,tiny'."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (3, 4):
        raise ValueError(f"expected kind,bin,intensity[,sizing], got {text!r}")
    kind = _KINDS.get(parts[0].lower())
    if kind is None:
        raise ValueError(f"unknown attack kind {parts[0]!r}")
    sizing = Sizing.TINY
    if len(parts) == 4:
        if parts[3].lower() not in _SIZING:
            raise ValueError(f"unknown sizing {parts[3]!r}")
        sizing = _SIZING[parts[3].lower()]
    return InjectionSpec(kind=kind, bin_index=int(parts[1]),
                         intensity=int(parts[2]), sizing=sizing)


def cmd_generate(args) -> int:
    spec_path = require_file(args.spec, "scenario spec")
    kv = read_kv_config(spec_path)
    r = Resolver(kv)
    seed = r.get("seed", args.seed, int, 0)
    spec = ScenarioSpec(
        duration_bins=r.get("duration_bins", None, int, 672),
        flows_per_bin=r.get("flows_per_bin", None, int, 14000),
        powerlaw_p=r.get("powerlaw_p", None, float, 0.8),
        bin_width=r.get("bin_width", None, int, 900),
        injections=tuple(parse_injection(t) for t in kv.get("inject", [])),
        seed=seed,
    )
    out_dir = ensure_out_dir(resolve_out_dir(args.out_dir))
    trace_path = out_dir / args.trace_name
    truth_path = out_dir / args.truth_name

    params = {
        "command": "generate", "spec": str(spec_path), "seed": spec.seed,
        "duration_bins": spec.duration_bins, "flows_per_bin": spec.flows_per_bin,
        "powerlaw_p": spec.powerlaw_p, "bin_width": spec.bin_width,
        "injections": [f"{i.kind.value},{i.bin_index},{i.intensity},{i.sizing.value}"
                       for i in spec.injections],
    }
    chash = config_hash(params)
    table, truths = generate_files(spec, trace_path, truth_path)
    write_json(out_dir / (args.trace_name + ".meta.json"),
               {"config_hash": chash, "params": params, "flows": len(table),
                "ground_truth_rows": len(truths)})
    print(trace_path)
    print(truth_path)
    return 0


# --------------------------------------------------------------- detect

def _pipeline_config(args, kv: Mapping[str, list[str]]) -> PipelineConfig:
    r = Resolver(kv)
    lam = r.get("lambda", getattr(args, "lambda_", None), float, None)
    scale_given = args.C is not None or "C" in kv
    scale = r.get("C", args.C, float, 2.0)
    if lam is not None and scale_given:
        raise UsageError("the sparsity weight is set either directly (lambda) "
                         "or through the scale (C), not both")
    thresholds = ThresholdConfig()
    tfile = r.get("thresholds", args.thresholds, str, None)
    if tfile is not None:
        thresholds = read_thresholds_file(require_file(tfile, "thresholds file"))
    return PipelineConfig(
        bin_width=r.get("bin_width", args.bin_width, int, 900),
        top_k=r.get("top_k", args.top_k, int, 20),
        sparsity_scale=scale,
        lambda_override=lam,
        alpha=r.get("alpha", args.alpha, int, 3),
        beta=r.get("beta", args.beta, int, 64),
        min_features=r.get("min_features", args.min_features, int, 4),
        thresholds=thresholds,
        normalize_columns=r.get("normalize_columns", args.normalize_columns, bool, False),
        intensity_on_raw=r.get("intensity_on_raw", args.intensity_on_raw, bool, False),
    )


def _load_table(trace: str):
    path = require_file(trace, "trace file")
    table, malformed = read_trace_table(path)
    if malformed:
        print(f"note: skipped {malformed} malformed lines", file=sys.stderr)
    return path, table


def cmd_detect(args) -> int:
    kv = read_kv_config(require_file(args.config, "config file")) if args.config else {}
    r = Resolver(kv)
    heuristic = r.get("heuristic", args.heuristic, str, "h1").lower()
    if heuristic not in ("h1", "h2", "union"):
        raise UsageError(f"heuristic must be h1, h2 or union, got {heuristic!r}")
    cfg = _pipeline_config(args, kv)
    trace_path, table = _load_table(r.get("trace", args.trace, str, None) or args.trace)

    out_dir = ensure_out_dir(resolve_out_dir(args.out_dir))
    params = cfg.params(heuristic)
    params["trace"] = str(trace_path)
    chash = config_hash({"command": "detect", **params})

    def report_stage(run: DetectionRun) -> None:
        n_attacks = sum(1 for d in run.diagnoses if d.verdict.value != "false_positive")
        print(f"[{run.heuristic.value}] filtered flows: {run.filtered_flows} "
              f"across {run.n_bins} bins")
        print(f"[{run.heuristic.value}] committee sizes: "
              + ", ".join(f"{k.value}={run.elections[k].senators.size}"
                          for k in run.elections))
        print(f"[{run.heuristic.value}] flagged bins: {len(run.flagged)}")
        print(f"[{run.heuristic.value}] attack diagnoses: {n_attacks}, "
              f"cleared: {len(run.diagnoses) - n_attacks}")

    if heuristic == "union":
        run1, run2 = detect_both(table, cfg)
        report_stage(run1)
        report_stage(run2)
        alarms = sorted({(d.bin_index, d.verdict.value)
                         for d in run1.diagnoses + run2.diagnoses
                         if d.verdict.value != "false_positive"})
        obj = {
            "method": "union",
            "params": dict(params),
            "config_hash": chash,
            "trace": str(trace_path),
            "n_bins": run1.n_bins,
            "bin_width": run1.bin_width,
            "alarms": [{"bin": b, "verdict": v} for b, v in alarms],
            "runs": {
                "h1": run_dict(run1, cfg.params("h1"), chash, str(trace_path)),
                "h2": run_dict(run2, cfg.params("h2"), chash, str(trace_path)),
            },
        }
    else:
        run = detect(table, Heuristic[heuristic.upper()], cfg)
        report_stage(run)
        obj = run_dict(run, params, chash, str(trace_path))

    out_path = out_dir / args.out
    write_json(out_path, obj)
    print(out_path)
    return 0


# -------------------------------------------------------------- baseline

def cmd_baseline(args) -> int:
    kv = read_kv_config(require_file(args.config, "config file")) if args.config else {}
    r = Resolver(kv)
    trace_path, table = _load_table(r.get("trace", args.trace, str, None) or args.trace)
    bcfg = BaselineConfig(
        buckets=r.get("buckets", args.buckets, int, 64),
        seed=r.get("seed", args.seed, int, 0),
        epsilon=r.get("epsilon", args.epsilon, float, 1e-6),
        warmup_fraction=r.get("warmup_fraction", args.warmup_fraction, float, 0.10),
        sigma_factor=r.get("sigma_factor", args.sigma_factor, float, 3.0),
        min_support_fraction=r.get("min_support_fraction",
                                   args.min_support_fraction, float, 0.005),
        filter_small_flows=bool(args.filter) or parse_bool(kv.get("filter", ["false"])[-1]),
    )
    thresholds = ThresholdConfig()
    tfile = r.get("thresholds", args.thresholds, str, None)
    if tfile is not None:
        thresholds = read_thresholds_file(require_file(tfile, "thresholds file"))
    bin_width = r.get("bin_width", args.bin_width, int, 900)

    bins, t0, n_bins = bin_indices(table, bin_width)
    work_table, work_bins = table, bins
    if bcfg.filter_small_flows:
        from .flows import PrefilterConfig, prefilter_mask
        keep = np.flatnonzero(prefilter_mask(table, PrefilterConfig(Heuristic.H1)))
        work_table, work_bins = table.take(keep), bins[keep]

    result = run_baseline(work_table, work_bins, n_bins, bcfg, thresholds)

    params = {
        "command": "baseline", "trace": str(trace_path), "bin_width": bin_width,
        "buckets": bcfg.buckets, "seed": bcfg.seed, "epsilon": bcfg.epsilon,
        "warmup_fraction": bcfg.warmup_fraction, "sigma_factor": bcfg.sigma_factor,
        "min_support_fraction": bcfg.min_support_fraction,
        "filter_small_flows": bcfg.filter_small_flows,
    }
    chash = config_hash(params)
    out_dir = ensure_out_dir(resolve_out_dir(args.out_dir))
    obj = {
        "method": Method.APRIORI.value,
        "params": params,
        "config_hash": chash,
        "trace": str(trace_path),
        "n_bins": n_bins,
        "bin_width": bin_width,
        "gates": {k.value: result.thresholds[k] for k in result.thresholds},
        "alarmed_bins": result.alarmed_bins,
        "diagnoses": [diagnosis_dict(d) for d in result.diagnoses
                      if d.verdict.value != "false_positive"],
        "cleared_bins": [d.bin_index for d in result.diagnoses
                         if d.verdict.value == "false_positive"],
    }
    out_path = out_dir / args.out
    write_json(out_path, obj)
    n_attacks = sum(1 for d in result.diagnoses if d.verdict.value != "false_positive")
    print(f"[apriori] alarmed bins: {len(result.alarmed_bins)}, "
          f"attack diagnoses: {n_attacks}")
    print(out_path)
    return 0


# -------------------------------------------------------- learn-thresholds

def cmd_learn(args) -> int:
    hist_path = require_file(args.history, "history file")
    intensities: list[float] = []
    labels: list[str] = []
    with open(hist_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["intensity", "label"]:
            raise ValueError(
                f"history file must have header 'intensity,label', got {reader.fieldnames}")
        for row in reader:
            intensities.append(float(row["intensity"]))
            labels.append(row["label"].strip())
    thresholds = learn_thresholds(intensities, labels)
    params = {"command": "learn-thresholds", "history": str(hist_path),
              "max_depth": 8}
    chash = config_hash(params)
    out_dir = ensure_out_dir(resolve_out_dir(args.out_dir))
    out_path = out_dir / args.out
    write_thresholds_file(out_path, thresholds, chash)
    print(f"ddos={thresholds.ddos!r} dos={thresholds.dos!r} scan={thresholds.scan!r}")
    print(out_path)
    return 0


# -------------------------------------------------------------- evaluate

def _alarms_from_report(obj: Mapping) -> set[tuple[int, str]]:
    if obj.get("method") == "union":
        return {(a["bin"], a["verdict"]) for a in obj["alarms"]}
    return {(d["bin"], d["verdict"]) for d in obj["diagnoses"]
            if d["verdict"] != "false_positive"}


def cmd_evaluate(args) -> int:
    reports = []
    for p in args.diagnoses:
        with open(require_file(p, "diagnoses file"), encoding="utf-8") as fh:
            reports.append(json.load(fh))
    truth_path = require_file(args.truth, "ground-truth file")
    truth = truth_pairs(read_ground_truth(truth_path))

    traces = {rep.get("trace") for rep in reports}
    widths = {rep.get("bin_width") for rep in reports}
    if len(traces) > 1 or len(widths) > 1:
        raise RuntimeError(f"diagnoses files disagree on their trace: {sorted(map(str, traces))}")
    n_bins = min(rep.get("n_bins", 0) for rep in reports)
    stray = [b for b, _ in truth if b >= n_bins]
    if stray:
        raise RuntimeError(
            f"ground truth names bins {sorted(stray)} beyond the diagnosed trace "
            f"({n_bins} bins); trace and truth do not match")

    if len(reports) == 1:
        method = reports[0].get("method", "h1")
        alarms = _alarms_from_report(reports[0])
    else:
        method = Method.UNION.value
        alarms = set()
        for rep in reports:
            alarms |= _alarms_from_report(rep)

    params = {
        "command": "evaluate",
        "diagnoses": [str(p) for p in args.diagnoses],
        "truth": str(truth_path),
        "lenient": bool(args.lenient),
        "input_hashes": [rep.get("config_hash") for rep in reports],
    }
    chash = config_hash(params)
    card = score_alarms(alarms, truth, method, lenient=bool(args.lenient), params=params)
    obj = report_dict(card, config_hash=chash)
    out_dir = ensure_out_dir(resolve_out_dir(args.out_dir))
    out_path = out_dir / args.out
    write_json(out_path, obj)
    print(f"[{method}] detection_rate={card.detection_rate:.4f} "
          f"false_positive_rate={card.false_positive_rate:.4f} "
          f"alarms={card.alarms_raised}")
    print(out_path)
    return 0


# ------------------------------------------------------------------ roc

def cmd_roc(args) -> int:
    kv = read_kv_config(require_file(args.config, "config file")) if args.config else {}
    r = Resolver(kv)
    cfg = _pipeline_config(args, kv)
    if cfg.lambda_override is not None:
        raise UsageError("the sweep varies the sparsity scale; --lambda cannot be set")
    trace_path, table = _load_table(r.get("trace", args.trace, str, None) or args.trace)
    truth = truth_pairs(read_ground_truth(require_file(args.truth, "ground-truth file")))
    heuristic = r.get("heuristic", args.heuristic, str, "h1").lower()
    if heuristic not in ("h1", "h2"):
        raise UsageError(f"roc sweeps one filter at a time: h1 or h2, got {heuristic!r}")
    grid = [float(x) for x in args.grid.split(",") if x.strip()]
    if not grid:
        raise UsageError("empty sweep grid")

    points = sweep_sparsity(table, Heuristic[heuristic.upper()], grid, cfg)
    roc = []
    for pt in points:
        alarms = {(d.bin_index, d.verdict.value) for d in pt.diagnoses
                  if d.verdict.value != "false_positive"}
        card = score_alarms(alarms, truth, heuristic)
        roc.append(RocPoint.from_card(pt.sparsity_scale, card))
        print(f"scale={pt.sparsity_scale:g} detections={card.detected} "
              f"false_positives={card.false_positives}")

    params = cfg.params(heuristic)
    params.pop("sparsity_scale", None)
    params["trace"] = str(trace_path)
    params["grid"] = grid
    chash = config_hash({"command": "roc", **params})
    obj = {
        "method": heuristic,
        "params": params,
        "config_hash": chash,
        "trace": str(trace_path),
        "roc": [{"param_value": p.param_value, "detections": p.detections,
                 "false_positives": p.false_positives,
                 "detection_rate": p.detection_rate,
                 "false_positive_rate": p.false_positive_rate} for p in roc],
    }
    out_dir = ensure_out_dir(resolve_out_dir(args.out_dir))
    out_path = out_dir / args.out
    write_json(out_path, obj)
    print(out_path)
    return 0


# ----------------------------------------------------------------- parser

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out-dir", default=None,
                    help=f"output directory (default: ${ENV_OUT_DIR} or '.')")
    sp.add_argument("--config", default=None, help="flat key=value config file")


def _add_detect_options(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--trace", required=True, help="flow trace CSV")
    sp.add_argument("--bin-width", type=int, default=None)
    sp.add_argument("--top-k", type=int, default=None, help="committee size per bin")
    group = sp.add_mutually_exclusive_group()
    group.add_argument("--C", type=float, default=None,
                       help="sparsity scale (weight = C/sqrt(max dim))")
    group.add_argument("--lambda", dest="lambda_", type=float, default=None,
                       help="direct sparsity weight, overrides --C")
    sp.add_argument("--alpha", type=int, default=None, help="H1 packet cap")
    sp.add_argument("--beta", type=int, default=None, help="H2 byte cap")
    sp.add_argument("--min-features", type=int, default=None)
    sp.add_argument("--thresholds", default=None, help="thresholds key=value file")
    sp.add_argument("--normalize-columns", action="store_const", const=True, default=None)
    sp.add_argument("--intensity-on-raw", action="store_const", const=True, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowsenate",
        description="Anomalous time-bin detection and diagnosis for sampled flow traces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a trace with planted attacks")
    g.add_argument("spec", help="scenario spec (flat key=value; repeated 'inject' lines)")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--trace-name", default="trace.csv")
    g.add_argument("--truth-name", default="truth.csv")
    _add_common(g)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="run the detection pipeline on a trace")
    _add_detect_options(d)
    d.add_argument("--heuristic", choices=("h1", "h2", "union"), default=None)
    d.add_argument("--out", default="diagnoses.json")
    _add_common(d)
    d.set_defaults(func=cmd_detect)

    b = sub.add_parser("baseline", help="histogram-change + frequent-set detector")
    b.add_argument("--trace", required=True)
    b.add_argument("--bin-width", type=int, default=None)
    b.add_argument("--buckets", type=int, default=None)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--epsilon", type=float, default=None)
    b.add_argument("--warmup-fraction", type=float, default=None)
    b.add_argument("--sigma-factor", type=float, default=None)
    b.add_argument("--min-support-fraction", type=float, default=None)
    b.add_argument("--filter", action="store_true",
                   help="score small flows only instead of raw traffic")
    b.add_argument("--thresholds", default=None)
    b.add_argument("--out", default="baseline.json")
    _add_common(b)
    b.set_defaults(func=cmd_baseline)

    lt = sub.add_parser("learn-thresholds", help="fit verdict thresholds from history")
    lt.add_argument("--history", required=True,
                    help="CSV with header intensity,label (labels: scan, dos, ddos)")
    lt.add_argument("--out", default="thresholds.conf")
    _add_common(lt)
    lt.set_defaults(func=cmd_learn)

    e = sub.add_parser("evaluate", help="score diagnoses against ground truth")
    e.add_argument("--diagnoses", nargs="+", required=True,
                   help="one report, or two to merge by alarm union")
    e.add_argument("--truth", required=True, help="ground-truth CSV")
    e.add_argument("--lenient", action="store_true",
                   help="credit bin-only matches (default: bin and kind)")
    e.add_argument("--out", default="scorecard.json")
    _add_common(e)
    e.set_defaults(func=cmd_evaluate)

    rc = sub.add_parser("roc", help="sweep the sparsity scale and score each point")
    _add_detect_options(rc)
    rc.add_argument("--heuristic", choices=("h1", "h2"), default=None)
    rc.add_argument("--truth", required=True)
    rc.add_argument("--grid", default="1.0,1.5,2.0,2.5,3.0",
                    help="comma-separated sparsity scales")
    rc.add_argument("--out", default="roc.json")
    _add_common(rc)
    rc.set_defaults(func=cmd_roc)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:   # argparse handles usage errors with code 2
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        print(parser.format_usage(), end="", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

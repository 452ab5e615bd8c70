"""Experiment runner: configuration, ensembles, persistence, reports.

One JSON document configures a run; command-line flags override its
fields. Each mode writes a manifest.json holding the fully resolved
configuration (plus the derived per-replica seeds), so re-running with
--config manifest.json reproduces every artifact byte for byte.

Subcommands and their artifacts:

  generate      one graph: edges.tsv, positions.csv, degree_hist.csv,
                report.json
  ensemble      replicas: degree_hist.csv (pooled), per-replica edge
                lists (opt-in), theory.csv (alpha > 2), report.json
                with per-degree z-scores
  theory        predictions only: theory.csv, report.json
  analyze       measure an existing edge list: report.json,
                degree_hist.csv
  couple        perturbed pairs: coupling_r###.csv trajectories,
                coupling_summary.json
  check-kernel  kernel regularity report: report.json

File formats: edges.tsv ("src\\thead", 1-indexed), positions.csv
("vertex,x,y,z"), degree_hist.csv ("k,count"), theory.csv ("k,p_k"),
coupling CSVs ("sigma,delta"). UTF-8, LF line endings, headers always.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import warnings

import numpy as np

from . import __version__, graphstats, theory
from .coupling import mismatch_growth_fit, run_coupled
from .kernels import kernel_from_json, kernel_report, kernel_to_json
from .process import (
    GraphState,
    ProcessParams,
    replica_seed,
    run,
    write_edge_list,
    write_positions,
)

__all__ = ["ExperimentConfig", "validate_config", "run_experiment", "main"]

MODES = ("generate", "ensemble", "theory", "analyze", "couple", "check-kernel")

_CONFIG_DEFAULTS = {
    "n": 1000,
    "m": 2,
    "alpha": 3.0,
    "delta": 0.0,
    "kernel": {"variant": "constant"},
    "seed": 0,
    "replicas": 1,
    "snapshot_times": [],
    "outputs": "out",
    "write_edges": None,      # default: on for generate, off for ensemble
    "jobs": None,
    "tau": None,              # couple mode
    "k_max": 100_000,         # theory table cutoff
    "k_min_tail": None,       # tail fit start; default 5*m
    "mu": 1.0,                # kernel checks
    "smooth_L": 1.0,
    "diameter_method": "ifub",
    "edges_path": None,       # analyze mode input
    "fast": False,
}


@dataclasses.dataclass
class ExperimentConfig:
    mode: str
    params: ProcessParams
    replicas: int
    snapshot_times: list[int]
    outputs: str
    write_edges: bool
    jobs: int | None
    tau: int | None
    k_max: int
    k_min_tail: int
    mu: float
    smooth_L: float
    diameter_method: str
    edges_path: str | None
    fast: bool

    def resolved(self) -> dict:
        """The full configuration as a plain JSON-ready dict."""
        return {
            "mode": self.mode,
            "n": self.params.n,
            "m": self.params.m,
            "alpha": self.params.alpha,
            "delta": self.params.delta,
            "kernel": kernel_to_json(self.params.kernel),
            "seed": self.params.seed,
            "replicas": self.replicas,
            "snapshot_times": self.snapshot_times,
            "outputs": self.outputs,
            "write_edges": self.write_edges,
            "jobs": self.jobs,
            "tau": self.tau,
            "k_max": self.k_max,
            "k_min_tail": self.k_min_tail,
            "mu": self.mu,
            "smooth_L": self.smooth_L,
            "diameter_method": self.diameter_method,
            "edges_path": self.edges_path,
            "fast": self.fast,
        }


def validate_config(raw, mode: str | None = None):
    """Parse and validate a configuration document.

    ``raw`` is a JSON string or a dict; a manifest (with a "config"
    key) is accepted and unwrapped. Returns (ExperimentConfig, errors);
    the config is None whenever errors is nonempty. Every violated
    constraint is reported with the constraint spelled out.
    """
    errors: list[str] = []
    if isinstance(raw, (str, bytes)):
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            return None, [f"configuration is not valid JSON: {exc}"]
    else:
        doc = dict(raw)
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]

    merged = dict(_CONFIG_DEFAULTS)
    known = set(_CONFIG_DEFAULTS) | {"mode"}
    for key in doc:
        if key not in known:
            errors.append(f"unknown configuration field {key!r}")
    merged.update({k: v for k, v in doc.items() if k in known})
    mode = mode or merged.get("mode")
    if mode not in MODES:
        errors.append(f"mode must be one of {MODES}, got {mode!r}")

    n, m = merged["n"], merged["m"]
    alpha, delta = merged["alpha"], merged["delta"]
    if not isinstance(n, int) or n < 1:
        errors.append("n must be an integer >= 1")
    if not isinstance(m, int) or m < 1:
        errors.append("m must be an integer >= 1")
    if not alpha > 0:
        errors.append("alpha must satisfy alpha > 0")
    if isinstance(m, int) and m >= 1 and not delta > -m:
        errors.append(f"delta must satisfy delta > -m (delta={delta}, m={m})")
    try:
        kernel = kernel_from_json(merged["kernel"])
    except (ValueError, KeyError, TypeError) as exc:
        errors.append(f"invalid kernel: {exc}")
        kernel = None

    if alpha <= 2.0 and mode in ("ensemble", "theory") :
        warnings.warn("alpha <= 2: the theory table requires alpha > 2; "
                      "it will be reported as unavailable")

    replicas = merged["replicas"]
    if not isinstance(replicas, int) or replicas < 1:
        errors.append("replicas must be an integer >= 1")
    snapshot_times = merged["snapshot_times"]
    if (not isinstance(snapshot_times, list)
            or any(not isinstance(t, int) for t in snapshot_times)):
        errors.append("snapshot_times must be a list of integers")
    elif isinstance(n, int) and (
            sorted(snapshot_times) != snapshot_times
            or any(not 1 <= t <= n for t in snapshot_times)):
        errors.append("snapshot_times must be ascending and within [1, n]")
    tau = merged["tau"]
    if mode == "couple":
        if tau is None:
            tau = max(1, (n if isinstance(n, int) else 1) // 100)
        if not isinstance(tau, int) or not 1 <= tau <= (n if isinstance(n, int) else tau):
            errors.append("tau must be an integer in [1, n]")
    if mode == "analyze" and not merged["edges_path"]:
        errors.append("analyze mode needs edges_path (an edges.tsv to measure)")
    if merged["diameter_method"] not in ("exact", "ifub", "sampled"):
        errors.append("diameter_method must be exact, ifub or sampled")

    if errors:
        return None, errors

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = ProcessParams(n=n, m=m, alpha=float(alpha), delta=float(delta),
                               kernel=kernel, seed=int(merged["seed"]))
    write_edges = merged["write_edges"]
    if write_edges is None:
        write_edges = mode == "generate"
    cfg = ExperimentConfig(
        mode=mode,
        params=params,
        replicas=replicas,
        snapshot_times=list(snapshot_times),
        outputs=str(merged["outputs"]),
        write_edges=bool(write_edges),
        jobs=merged["jobs"],
        tau=tau,
        k_max=int(merged["k_max"]),
        k_min_tail=int(merged["k_min_tail"] or 5 * m),
        mu=float(merged["mu"]),
        smooth_L=float(merged["smooth_L"]),
        diameter_method=merged["diameter_method"],
        edges_path=merged["edges_path"],
        fast=bool(merged["fast"]),
    )
    return cfg, []


def _write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def _write_json(path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_hist_csv(path, k, counts) -> None:
    lines = ["k,count"]
    lines += [f"{int(kk)},{int(cc)}" for kk, cc in zip(k, counts)]
    _write_text(path, "\n".join(lines) + "\n")


def _write_theory_csv(path, k, p) -> None:
    lines = ["k,p_k"]
    lines += [f"{int(kk)},{pp:.17g}" for kk, pp in zip(k, p)]
    _write_text(path, "\n".join(lines) + "\n")


def _manifest(cfg: ExperimentConfig) -> dict:
    return {
        "version": __version__,
        "config": cfg.resolved(),
        "replica_seeds": [replica_seed(cfg.params.seed, r)
                          for r in range(cfg.replicas)],
    }


def _theory_block(cfg: ExperimentConfig):
    """Prediction table and summary, or (None, reason) below alpha = 2."""
    p = cfg.params
    if not p.alpha > 2.0:
        return None, "theory unavailable: requires alpha > 2"
    pred = theory.predict(p, k_max=cfg.k_max)
    return pred, None


def _graph_report(state: GraphState, cfg: ExperimentConfig) -> dict:
    hist = graphstats.degree_histogram(state)
    hist.validate(cfg.params.m)
    comp = graphstats.connected_components(state)
    method = cfg.diameter_method
    if method == "exact" and state.sigma > 20_000:
        method = "ifub"
    diam = graphstats.diameter(state, method=method)
    report = {
        "sigma": state.sigma,
        "components": {"count": int(comp.size), "largest": int(comp[0]),
                       "sizes_head": [int(s) for s in comp[:10]]},
        "diameter": {"value": diam.value, "method": diam.method,
                     "is_lower_bound": diam.is_lower_bound,
                     "connected": diam.connected},
        "selfloops": int(state.selfloop_counts().sum()),
    }
    tail_n = int(hist.counts[hist.k >= cfg.k_min_tail].sum())
    if tail_n >= 50:
        fit = graphstats.tail_exponent_fit(hist, cfg.k_min_tail)
        report["tail_fit"] = {
            "k_min": fit.k_min, "n_tail": fit.n_tail,
            "mle_exponent": fit.mle_exponent, "mle_stderr": fit.mle_stderr,
            "ls_exponent": fit.ls_exponent, "ls_stderr": fit.ls_stderr,
            "gof_pvalue": fit.gof_pvalue,
        }
    else:
        report["tail_fit"] = {"skipped": f"only {tail_n} observations with "
                                         f"k >= {cfg.k_min_tail}, need 50"}
    return report


def _mode_generate(cfg: ExperimentConfig, out: str) -> int:
    result = run(cfg.params, snapshot_times=cfg.snapshot_times, fast=cfg.fast)
    state = result.state
    state.validate()
    hist = graphstats.degree_histogram(state)
    _write_hist_csv(os.path.join(out, "degree_hist.csv"), hist.k, hist.counts)
    if cfg.write_edges:
        write_edge_list(state, os.path.join(out, "edges.tsv"))
        write_positions(state, os.path.join(out, "positions.csv"))
    report = {"version": __version__, "mode": "generate",
              "graph": _graph_report(state, cfg)}
    _write_json(os.path.join(out, "report.json"), report)
    return 0


def _hist_summary(result):
    state = result.state
    state.validate()
    hist = graphstats.degree_histogram(state)
    hist.validate(state.m)
    return hist


def _mode_ensemble(cfg: ExperimentConfig, out: str) -> int:
    hists = []
    for r in range(cfg.replicas):
        params = cfg.params.with_seed(replica_seed(cfg.params.seed, r))
        result = run(params, fast=cfg.fast)
        result.state.validate()
        hist = graphstats.degree_histogram(result.state)
        hist.validate(cfg.params.m)
        hists.append(hist)
        if cfg.write_edges:
            write_edge_list(result.state,
                            os.path.join(out, f"edges_r{r:03d}.tsv"))
    pooled: dict[int, int] = {}
    for h in hists:
        for k, c in zip(h.k, h.counts):
            pooled[int(k)] = pooled.get(int(k), 0) + int(c)
    ks = sorted(pooled)
    _write_hist_csv(os.path.join(out, "degree_hist.csv"), ks,
                    [pooled[k] for k in ks])

    report = {"version": __version__, "mode": "ensemble",
              "replicas": cfg.replicas}
    pred, reason = _theory_block(cfg)
    if pred is None:
        report["theory"] = reason
    else:
        dist = pred.degree_distribution
        _write_theory_csv(os.path.join(out, "theory.csv"), dist.k, dist.p)
        rows = graphstats.compare_empirical_theory(
            hists, dist.k, dist.p,
            k_range=(cfg.params.m, cfg.params.m + 50))
        report["theory"] = {
            "tail_exponent": pred.tail_exponent,
            "degree_growth_a": pred.degree_growth_a,
            "per_k": [dataclasses.asdict(row) for row in rows],
        }
    _write_json(os.path.join(out, "report.json"), report)
    return 0


def _mode_theory(cfg: ExperimentConfig, out: str) -> int:
    pred, reason = _theory_block(cfg)
    report = {"version": __version__, "mode": "theory"}
    if pred is None:
        report["theory"] = reason
        _write_json(os.path.join(out, "report.json"), report)
        return 0
    dist = pred.degree_distribution
    _write_theory_csv(os.path.join(out, "theory.csv"), dist.k, dist.p)
    report["theory"] = {
        "tail_exponent": pred.tail_exponent,
        "expected_attraction_slope": pred.expected_attraction_slope,
        "degree_growth_a": pred.degree_growth_a,
        "truncation_deficit": dist.truncation_deficit,
        "selfloop_pmf": {int(k): float(p)
                         for k, p in zip(pred.selfloop_k, pred.selfloop_p)},
    }
    _write_json(os.path.join(out, "report.json"), report)
    return 0


def _read_edges_tsv(path) -> GraphState:
    data = np.loadtxt(path, skiprows=1, dtype=np.int64)
    data = np.atleast_2d(data) - 1
    n = int(data.max()) + 1
    m, rem = divmod(data.shape[0], n)
    if rem:
        raise ValueError("edge list is not m edges per vertex")
    state = GraphState(m, n)
    for v in range(n):
        state.append_step(np.array([0.0, 0.0, 1.0]),
                          data[v * m : (v + 1) * m, 1])
    # Positions are unknown to an edge list; mark sigma only.
    return state


def _mode_analyze(cfg: ExperimentConfig, out: str) -> int:
    state = _read_edges_tsv(cfg.edges_path)
    hist = graphstats.degree_histogram(state)
    _write_hist_csv(os.path.join(out, "degree_hist.csv"), hist.k, hist.counts)
    report = {"version": __version__, "mode": "analyze",
              "edges_path": cfg.edges_path,
              "graph": _graph_report(state, cfg)}
    _write_json(os.path.join(out, "report.json"), report)
    return 0


def _mode_couple(cfg: ExperimentConfig, out: str) -> int:
    runs = []
    for r in range(cfg.replicas):
        params = cfg.params.with_seed(replica_seed(cfg.params.seed, r))
        cr = run_coupled(params, cfg.tau)
        runs.append(cr)
        lines = ["sigma,delta"]
        lines += [f"{int(s)},{int(d)}"
                  for s, d in zip(cr.sigma, cr.mismatches)]
        _write_text(os.path.join(out, f"coupling_r{r:03d}.csv"),
                    "\n".join(lines) + "\n")
    summary = {"version": __version__, "mode": "couple", "tau": cfg.tau,
               "replicas": cfg.replicas,
               "final_mismatches": [r.final() for r in runs]}
    try:
        fit = mismatch_growth_fit(runs, cfg.params,
                                  min_replicas=min(cfg.replicas, 20))
        summary["growth_fit"] = {"slope": fit.slope, "stderr": fit.stderr,
                                 "ci95": list(fit.ci95),
                                 "n_points": fit.n_points}
        summary["degree_growth_a"] = theory.degree_growth_exponent(
            cfg.params.m, cfg.params.alpha, cfg.params.delta)
    except ValueError as exc:
        summary["growth_fit"] = {"skipped": str(exc)}
    _write_json(os.path.join(out, "coupling_summary.json"), summary)
    return 0


def _mode_check_kernel(cfg: ExperimentConfig, out: str) -> int:
    rep = kernel_report(cfg.params.kernel, cfg.params.n, mu=cfg.mu,
                        L=cfg.smooth_L)
    _write_json(os.path.join(out, "report.json"),
                {"version": __version__, "mode": "check-kernel",
                 **rep.as_dict()})
    return 0


_MODE_RUNNERS = {
    "generate": _mode_generate,
    "ensemble": _mode_ensemble,
    "theory": _mode_theory,
    "analyze": _mode_analyze,
    "couple": _mode_couple,
    "check-kernel": _mode_check_kernel,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    """Execute one experiment; returns a process exit status.

    Artifacts land in cfg.outputs; manifest.json is always written
    first. Any violated graph invariant surfaces as a nonzero status.
    """
    out = cfg.outputs
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "manifest.json"), _manifest(cfg))
    try:
        return _MODE_RUNNERS[cfg.mode](cfg, out)
    except AssertionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpaf",
        description="Geometric preferential attachment with fitness: "
                    "simulate, predict, verify.")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", help="JSON configuration (or manifest.json)")
        p.add_argument("--n", type=int)
        p.add_argument("--m", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--kernel", help='kernel JSON, e.g. '
                                        '\'{"variant": "constant"}\'')
        p.add_argument("--seed", type=int)
        p.add_argument("--replicas", type=int)
        p.add_argument("--out", dest="outputs")
        p.add_argument("--write-edges", action="store_true", default=None)
        p.add_argument("--fast", action="store_true", default=None)
        p.add_argument("--tau", type=int)
        p.add_argument("--k-max", dest="k_max", type=int)
        p.add_argument("--k-min-tail", dest="k_min_tail", type=int)
        p.add_argument("--mu", type=float)
        p.add_argument("--smooth-L", dest="smooth_L", type=float)
        p.add_argument("--diameter-method", dest="diameter_method",
                       choices=("exact", "ifub", "sampled"))
        p.add_argument("--edges-path", dest="edges_path")
        p.add_argument("--snapshot-times", dest="snapshot_times",
                       help="comma-separated vertex counts")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    doc = {}
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            raw = f.read()
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            print(f"configuration is not valid JSON: {exc}", file=sys.stderr)
            return 2
        if "config" in doc and isinstance(doc["config"], dict):
            doc = doc["config"]
    for key in ("n", "m", "alpha", "delta", "seed", "replicas", "outputs",
                "tau", "k_max", "k_min_tail", "mu", "smooth_L",
                "diameter_method", "edges_path"):
        val = getattr(args, key, None)
        if val is not None:
            doc[key] = val
    if args.kernel is not None:
        try:
            doc["kernel"] = json.loads(args.kernel)
        except json.JSONDecodeError as exc:
            print(f"--kernel is not valid JSON: {exc}", file=sys.stderr)
            return 2
    if args.write_edges is not None:
        doc["write_edges"] = args.write_edges
    if args.fast is not None:
        doc["fast"] = args.fast
    if args.snapshot_times is not None:
        doc["snapshot_times"] = [int(t) for t in args.snapshot_times.split(",") if t]

    cfg, errors = validate_config(doc, mode=args.mode)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: ``signet analyze|simulate|gossip|critical-beta|verify``.

Exit codes: 0 ok, 1 usage, 2 parse, 3 precondition, 4 numerical
non-convergence, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import SignetError, UsageError, VerificationFailed

COMMANDS = ("analyze", "simulate", "gossip", "critical-beta", "verify")


@dataclass
class RunConfig:
    command: str
    graph_path: str | None = None
    rule: str = "opposing"
    alpha: float = 0.2
    beta: float = 0.2
    bound_A: float | None = None
    x0: str | None = None
    steps: int = 1000
    runs: int = 100
    seed: int = 0
    out: str | None = None
    json: bool = False
    csv: bool = False
    continuous: bool = False
    dt: float = 1e-3
    only: list = field(default_factory=list)

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command != "verify" and not self.graph_path:
            raise UsageError("--graph is required")
        if self.rule not in ("opposing", "repelling"):
            raise UsageError("--rule must be opposing or repelling")
        if self.continuous:
            if not self.alpha > 0:
                raise UsageError("--alpha must be positive")
        elif not 0.0 < self.alpha < 1.0:
            raise UsageError("--alpha must lie in (0, 1)")
        if not self.beta >= 0.0:
            raise UsageError("--beta must be nonnegative")
        if self.bound_A is not None and not self.bound_A > 0.0:
            raise UsageError("--bound must be positive")
        if self.steps < 1 or self.runs < 1:
            raise UsageError("--steps and --runs must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must fit in 64 unsigned bits")
        if not self.dt > 0:
            raise UsageError("--dt must be positive")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="signet", description="Consensus dynamics on signed graphs.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--graph", dest="graph_path")
    p.add_argument("--rule", choices=("opposing", "repelling"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--bound", dest="bound_A", type=float)
    p.add_argument("--x0", help="inline vector, a file, or uniform:lo:hi:seed")
    p.add_argument("--steps", type=int, help="deterministic steps or gossip events per run")
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for output artifacts")
    p.add_argument("--json", action="store_true", default=None)
    p.add_argument("--csv", action="store_true", default=None)
    p.add_argument("--continuous", action="store_true", default=None, help="simulate the continuous-time flow")
    p.add_argument("--dt", type=float)
    p.add_argument("--config", help="key = value file; flags take precedence")
    p.add_argument("--only", type=int, nargs="+", help="verify: criterion ids to run")
    return p


_CONFIG_TYPES = {
    "graph": ("graph_path", str), "graph_path": ("graph_path", str), "rule": ("rule", str),
    "alpha": ("alpha", float), "beta": ("beta", float), "bound": ("bound_A", float),
    "bound_A": ("bound_A", float), "x0": ("x0", str), "steps": ("steps", int), "runs": ("runs", int),
    "seed": ("seed", int), "out": ("out", str), "json": ("json", "bool"), "csv": ("csv", "bool"),
    "continuous": ("continuous", "bool"), "dt": ("dt", float),
}


def read_config(path: str) -> dict:
    """``key = value`` lines, ``#`` comments; the same grammar the text reports use."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_TYPES:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            name, kind = _CONFIG_TYPES[key]
            try:
                if kind == "bool":
                    out[name] = val.lower() in ("1", "true", "yes", "on")
                else:
                    out[name] = kind(val)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def config_from_args(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    values = read_config(ns.config) if ns.config else {}
    for key, val in vars(ns).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            values[key] = val
    cfg = RunConfig(command=ns.command, **values)
    cfg.validate()
    return cfg


# -- formatting ---------------------------------------------------------------------


def fmt6(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.6g" % v
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt6(x) for x in v) + "]"
    return str(v)


def kv_block(d: dict, prefix: str = "") -> str:
    lines = []
    for key in d:
        val = d[key]
        if isinstance(val, dict):
            lines.append(kv_block(val, f"{prefix}{key}."))
        else:
            lines.append(f"{prefix}{key} = {fmt6(val)}")
    return "\n".join(line for line in lines if line)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dump_json(d: dict) -> str:
    return json.dumps(_jsonable(d), sort_keys=True, indent=1) + "\n"


def _write(out_dir: str | None, name: str, text: str):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_graph(path: str):
    from .graph import read_graph

    try:
        return read_graph(path)
    except OSError as exc:
        raise UsageError(f"cannot read graph: {exc}") from None


def _x0_spec(cfg: RunConfig, n: int, default: str):
    from .gossip import parse_x0_spec

    spec = cfg.x0 or default
    if not spec.startswith("uniform:") and os.path.isfile(spec):
        with open(spec, encoding="utf-8") as fh:
            spec = fh.read()
    try:
        return parse_x0_spec(spec, n)
    except ValueError as exc:
        raise UsageError(f"bad --x0: {exc}") from None


def _dynamics(cfg: RunConfig):
    from .laplacian import DynamicsConfig

    return DynamicsConfig(cfg.rule, cfg.alpha, cfg.beta, cfg.bound_A, cfg.continuous)


# -- commands -------------------------------------------------------------------------


def cmd_analyze(cfg: RunConfig) -> int:
    from .graph import check_structural_balance, check_weak_balance, connectivity_report
    from .spectral import spectral_report

    g = _load_graph(cfg.graph_path)
    diag = connectivity_report(g)
    report = {"graph": {"n": g.n, "directed": g.directed, "edges": len(g.edges)}, "diagnostics": diag.as_dict()}
    try:
        report["balance"] = check_structural_balance(g).as_dict()
        report["weak_balance"] = check_weak_balance(g).as_dict()
    except SignetError as exc:
        report["balance"] = {"error": str(exc)}
    report["spectral"] = spectral_report(g, _dynamics(cfg)).as_dict()
    text = dump_json(report) if cfg.json else _analyze_text(report) + "\n"
    sys.stdout.write(text)
    _write(cfg.out, "report.json" if cfg.json else "report.txt", text)
    return 0


def _partition_text(part) -> str:
    return "|".join("{" + ",".join(str(i) for i in s) + "}" for s in part)


def _analyze_text(report: dict) -> str:
    flat = dict(report)
    for key in ("balance", "weak_balance"):
        b = dict(flat.get(key, {}))
        if b.get("partition") is not None:
            b["partition"] = _partition_text(b["partition"])
        flat[key] = b
    diag = dict(flat["diagnostics"])
    diag["degrees"] = " ".join("(%d,%d,%d)" % tuple(d) for d in diag["degrees"])
    flat["diagnostics"] = diag
    spec = dict(flat["spectral"])
    spec["notes"] = "; ".join(spec["notes"]) or "none"
    flat["spectral"] = spec
    return kv_block(flat)


def cmd_simulate(cfg: RunConfig) -> int:
    from .deterministic import predict_limit, simulate, simulate_continuous
    from .gossip import initial_state

    g = _load_graph(cfg.graph_path)
    dyn = _dynamics(cfg)
    x0 = initial_state(_x0_spec(cfg, g.n, "uniform:-1:1:0"), g.n, 0)
    if cfg.continuous:
        traj = simulate_continuous(g, dyn, x0, cfg.steps * cfg.dt, cfg.dt)
    else:
        traj = simulate(g, dyn, x0, cfg.steps)
    pred = predict_limit(g, dyn, x0) if not cfg.continuous else None
    summary = {
        "status": traj.status,
        "steps": int(len(traj.times) - 1),
        "final": traj.final,
        "h": float(traj.h[-1]),
        "spread": float(traj.spread[-1]),
        "prediction": None if pred is None else pred.as_dict(),
    }
    if pred is not None and pred.limit is not None:
        summary["prediction_error"] = float(np.abs(traj.final - pred.limit).max())
    if cfg.json:
        sys.stdout.write(dump_json(summary))
    else:
        sys.stdout.write(kv_block(summary) + "\n")
    if cfg.out is not None:
        _write(cfg.out, "trajectory.csv", traj.to_csv())
        if cfg.json:
            _write(cfg.out, "prediction.json", dump_json(summary))
        else:
            _write(cfg.out, "prediction.txt", kv_block(summary) + "\n")
    return 0


def cmd_gossip(cfg: RunConfig) -> int:
    from .gossip import GossipProcess, monte_carlo, run_seed, run_trajectory, initial_state

    g = _load_graph(cfg.graph_path)
    dyn = _dynamics(cfg)
    spec = _x0_spec(cfg, g.n, f"uniform:-1:1:{cfg.seed}")
    proc = GossipProcess(g, seed=cfg.seed)
    summary = monte_carlo(proc, dyn, spec, cfg.runs, cfg.steps)
    text = summary.to_json()
    if cfg.out is not None:
        _write(cfg.out, "summary.json", text)
        if cfg.csv:
            for r in range(cfg.runs):
                tr = run_trajectory(GossipProcess(g, seed=run_seed(cfg.seed, r), mu=proc.mu), dyn,
                                    initial_state(spec, g.n, r), cfg.steps)
                _write(cfg.out, f"run_{r:04d}.csv", tr.to_csv())
    if cfg.json:
        sys.stdout.write(text)
    else:
        counts = {k: v for k, v in summary.verdict_counts.items() if v}
        sys.stdout.write(kv_block({
            "runs": summary.runs,
            "horizon": summary.horizon,
            "seed": summary.seed,
            "prediction": summary.prediction,
            "verdicts": counts,
            "lemma1_violations": summary.lemma1_violations,
            "diverging_runs": summary.diverging_runs,
        }) + "\n")
    return 0


def cmd_critical_beta(cfg: RunConfig) -> int:
    from .spectral import critical_beta_deterministic, critical_beta_directed_bound, critical_beta_gossip

    g = _load_graph(cfg.graph_path)
    out = {"alpha": cfg.alpha}
    if g.directed:
        out["deterministic_upper_bound"] = critical_beta_directed_bound(g, cfg.alpha)
        out["gossip"] = None
    else:
        out["deterministic"] = critical_beta_deterministic(g, cfg.alpha)
        out["gossip"] = critical_beta_gossip(g, cfg.alpha)
    text = dump_json(out) if cfg.json else kv_block(out) + "\n"
    sys.stdout.write(text)
    _write(cfg.out, "critical_beta.json" if cfg.json else "critical_beta.txt", text)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    from .acceptance import run_all

    results = run_all(cfg.only or None)
    for r in results:
        print(r.line(), flush=True)
    failed = [r.id for r in results if not r.passed]
    if cfg.out is not None:
        _write(cfg.out, "verify.json", dump_json({str(r.id): {"name": r.name, "passed": r.passed,
                                                               "detail": r.detail} for r in results}))
    if failed:
        raise VerificationFailed(f"criteria failed: {failed}")
    return 0


DISPATCH = {
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "gossip": cmd_gossip,
    "critical-beta": cmd_critical_beta,
    "verify": cmd_verify,
}


def execute(cfg: RunConfig) -> int:
    return DISPATCH[cfg.command](cfg)


def main(argv=None) -> int:
    try:
        cfg = config_from_args(sys.argv[1:] if argv is None else argv)
        return execute(cfg)
    except SignetError as exc:
        print(f"signet: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        # parameter ranges rejected by the dynamics config
        print(f"signet: {exc}", file=sys.stderr)
        return UsageError.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Acceptance criteria as runnable checks.

Each check returns a ``CriterionResult``. ``run_all`` executes them in order;
``signet verify`` and ``tests/test_acceptance.py`` are thin wrappers.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from . import generators as gen
from .deterministic import (
    LimitKind,
    check_joint_connectivity,
    predict_limit,
    simulate,
    simulate_continuous,
    simulate_switching,
)
from .graph import Verdict, build_graph, check_structural_balance, check_weak_balance, connectivity_report
from .gossip import (
    GossipProcess,
    OutcomeClass,
    UniformBox,
    empirical_second_moment,
    lemma1_monitor,
    monte_carlo,
    run_seed,
    run_trajectory,
)
from .laplacian import DynamicsConfig, build_matrices, expected_second_moment, quadratic_form, quadratic_form_scale, update_matrix
from .oracles import strong_balance_bruteforce, weak_balance_bruteforce
from .spectral import (
    critical_beta_deterministic,
    critical_beta_gossip,
    is_eventually_positive,
    mean_square_factor,
)


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.id:2d} {self.name}: {self.detail} ({self.seconds:.1f}s)"


CRITERIA = {}


def criterion(cid: int, name: str):
    def wrap(fn):
        def run() -> CriterionResult:
            t0 = time.perf_counter()
            try:
                passed, detail = fn()
            except Exception as exc:  # a crash is a failure, reported with its cause
                passed, detail = False, f"raised {type(exc).__name__}: {exc}"
            return CriterionResult(cid, name, bool(passed), detail, time.perf_counter() - t0)

        run.__name__ = fn.__name__
        CRITERIA[cid] = run
        return run

    return wrap


T2_LIMIT = np.array([1.0, 1.0, -1.0]) / 6.0


@criterion(1, "bipartite consensus on a balanced triangle")
def c01():
    t0 = time.perf_counter()
    tr = simulate(gen.triangle_t2(), DynamicsConfig("opposing", 0.2, 0.2), [1.0, 0.0, 0.5], 500)
    secs = time.perf_counter() - t0
    err = np.abs(tr.final - T2_LIMIT).max()
    steps = len(tr.times) - 1
    return err <= 1e-8 and steps <= 500 and secs < 1.0, f"err={err:.2e} steps={steps} time={secs:.3f}s"


@criterion(2, "zero consensus on an unbalanced triangle")
def c02():
    rng = np.random.default_rng(2)
    g = gen.triangle_t1()
    cfg = DynamicsConfig("opposing", 0.2, 0.2)
    worst, steps = 0.0, 0
    for _ in range(20):
        tr = simulate(g, cfg, rng.uniform(-1, 1, 3), 5000)
        worst = max(worst, np.abs(tr.final).max())
        steps = max(steps, len(tr.times) - 1)
    return worst <= 1e-8 and steps <= 5000, f"max|x(T)|={worst:.2e} max steps={steps}"


@criterion(3, "critical coupling for repelling dynamics")
def c03():
    g = gen.triangle_t1()
    b = critical_beta_deterministic(g, 0.2)
    ok_b = abs(b - 0.1) <= 1e-6  # hand value alpha/2
    rng = np.random.default_rng(3)
    x0 = rng.uniform(-1, 1, 3)
    tr = simulate(g, DynamicsConfig("repelling", 0.2, 0.09), x0, 5000)
    avg_err = abs(tr.final.mean() - x0.mean()) / abs(x0.mean())
    spread = tr.spread[-1]
    ok_avg = spread < 1e-8 and avg_err <= 1e-10
    div = 0
    cfg = DynamicsConfig("repelling", 0.2, 0.11)
    for _ in range(20):
        x0 = rng.uniform(-1, 1, 3)
        declared = simulate(g, cfg, x0, 5000).status == "diverged"
        full = simulate(g, cfg, x0, 5000, early_stop=False, stop_on_divergence=False)
        div += declared and bool(np.any(full.norm > 1e9))
    return ok_b and ok_avg and div >= 19, (
        f"beta*={b:.12f} | beta=0.09: spread={spread:.1e} avg rel err={avg_err:.1e} | beta=0.11: diverged {div}/20"
    )


@criterion(4, "directed limits from left eigenvectors")
def c04():
    rng = np.random.default_rng(4)
    cases = [(gen.directed_d3(), DynamicsConfig("opposing", 0.2, 0.2), np.array([1.0, 0.0, 0.5]))]
    tries = 0
    while len(cases) < 11 and tries < 500:
        tries += 1
        opposing = len(cases) % 2 == 1
        g = gen.random_strong_digraph(6, rng, balanced=opposing, positive_cycle=not opposing)
        dmax = max(d[0] for d in g.degrees)
        dplus = max(d[1] for d in g.degrees)
        if opposing:
            a = b = 0.45 / dmax
            cfg = DynamicsConfig("opposing", a, b)
        else:
            cfg = DynamicsConfig("repelling", 0.5 / dplus, 0.02)
        x0 = rng.uniform(-1, 1, 6)
        if predict_limit(g, cfg, x0).kind in (LimitKind.UNKNOWN, LimitKind.DIVERGENT):
            continue
        cases.append((g, cfg, x0))
    worst = 0.0
    kinds = set()
    for g, cfg, x0 in cases:
        pred = predict_limit(g, cfg, x0)
        kinds.add(pred.kind.value)
        tr = simulate(g, cfg, x0, 200_000)
        worst = max(worst, np.abs(tr.final - pred.limit).max())
    return len(cases) == 11 and worst <= 1e-6, f"{len(cases)} digraphs, kinds={sorted(kinds)}, max err={worst:.2e}"


@criterion(5, "eventual positivity")
def c05():
    g = gen.triangle_t1()
    rep = is_eventually_positive(update_matrix(g, DynamicsConfig("repelling", 0.2, 0.05)))
    opp = is_eventually_positive(update_matrix(g, DynamicsConfig("opposing", 0.2, 0.2)))
    ok = rep.verdict is True and rep.k0 is not None and rep.k0 <= 200 and opp.verdict is False
    return ok, f"M: {rep.verdict} k0={rep.k0}; W: {opp.verdict} ({opp.reason})"


@criterion(6, "continuous-time opposing flow")
def c06():
    g = gen.triangle_t2()
    cfg = DynamicsConfig("opposing", 1.0, 1.0, continuous=True)
    exact = simulate_continuous(g, cfg, [1.0, 0.0, 0.5], 50.0, 1e-3, method="exact")
    rk4 = simulate_continuous(g, cfg, [1.0, 0.0, 0.5], 50.0, 1e-3, method="rk4")
    err = np.abs(exact.final - T2_LIMIT).max()
    gap = np.abs(exact.states - rk4.states).max()
    return err <= 1e-8 and gap <= 1e-6, f"limit err={err:.2e} exact-vs-rk4={gap:.2e}"


@criterion(7, "modulus consensus under switching graphs")
def c07():
    tree_a = build_graph(3, False, [(1, 2, 1), (1, 3, -1)])
    tree_b = build_graph(3, False, [(1, 2, 1), (2, 3, -1)])
    seq = [tree_a, tree_b]
    joint = check_joint_connectivity(seq, 1)
    _, verdict = simulate_switching(seq, DynamicsConfig("opposing", 0.2, 0.2), [1.0, 0.0, 0.5], 5000, delta=0.5)
    ok = joint and verdict.modulus_consensus and verdict.modulus_gap <= 1e-6
    return ok, f"jointly connected={joint} | |x| gap={verdict.modulus_gap:.2e} y*={verdict.y_star:.6f}"


@criterion(8, "empirical second moments")
def c08():
    t2, t1 = gen.triangle_t2(), gen.triangle_t1()
    cfg = DynamicsConfig("opposing", 0.2, 0.2)
    emp2, _ = empirical_second_moment(GossipProcess(t2, seed=8), cfg, 100_000, gauge_form=True)
    err2 = np.abs(emp2 - expected_second_moment(t2, cfg, GossipProcess(t2).mu, gauge_form=True)).max()
    emp1, _ = empirical_second_moment(GossipProcess(t1, seed=9), cfg, 100_000)
    err1 = np.abs(emp1 - expected_second_moment(t1, cfg, GossipProcess(t1).mu)).max()
    return err1 <= 0.01 and err2 <= 0.01, f"P*_G err={err2:.2e} P_G err={err1:.2e}"


@criterion(9, "gossip repelling threshold")
def c09():
    g = gen.triangle_t1()
    closed = (-1.0 + math.sqrt(1.5)) / 2.0  # r = 1/8 from the hand-computed blocks
    b = critical_beta_gossip(g, 0.5)
    cfg = DynamicsConfig("repelling", 0.5, 0.9 * b)
    factor = mean_square_factor(g, cfg)
    x0 = np.array([3.0, 0.0, 0.0])
    s = monte_carlo(GossipProcess(g, seed=9), cfg, x0, 200, 10_000, tol=1e-2)
    hits = int(np.sum(np.abs(s.terminal_states - x0.mean()).max(axis=1) <= 1e-2))
    ok = abs(b - closed) <= 1e-6 and hits >= 195 and factor < 1.0
    return ok, f"beta*={b:.9f} (closed {closed:.9f}) within 1e-2: {hits}/200 factor={factor:.6f}"


@criterion(10, "bipartite consensus for gossip")
def c10():
    g = gen.triangle_t2()
    s = monte_carlo(GossipProcess(g, seed=10), DynamicsConfig("opposing", 0.2, 0.2), np.array([1.0, 0.0, 0.5]),
                    200, 10_000, tol=1e-3, mse_stride=1)
    hits = s.verdict_counts[OutcomeClass.BIPARTITE.value]
    smooth = np.convolve(s.mse, np.ones(100) / 100, mode="valid")
    rises = np.diff(smooth)
    slack = 1e-12 * smooth[0]
    monotone = bool(np.all(rises <= slack))
    return hits == 200 and monotone, f"{hits}/200 bipartite, smoothed MSE nonincreasing={monotone} (max rise {rises.max():.1e})"


@criterion(11, "lower bound on the max magnitude")
def c11():
    cfg = DynamicsConfig("opposing", 0.3, 3.0)
    total = 0
    recount = 0
    for g, seed in ((gen.triangle_t2(), 110), (gen.triangle_t1(), 111)):
        box = UniformBox(-1.0, 1.0, seed)
        s = monte_carlo(GossipProcess(g, seed=seed), cfg, box, 100, 1000)
        total += s.lemma1_violations
        for r in range(100):
            tr = run_trajectory(GossipProcess(g, seed=run_seed(seed, r)), cfg, box.draw(3, r), 1000)
            recount += lemma1_monitor(tr, cfg)
    return total == 0 and recount == 0, f"violations: kernel={total} recount={recount} over 200 runs"


def _clustering_share(g, alpha, runs, horizon, seed):
    cfg = DynamicsConfig("repelling", alpha, 10.0, 1.0)
    s = monte_carlo(GossipProcess(g, seed=seed), cfg, UniformBox(-1.0, 1.0, seed), runs, horizon)
    return s


@criterion(12, "boundary clustering, balanced complete graph")
def c12():
    g = gen.complete_from_groups([{1, 2}, {3, 4}])
    s = _clustering_share(g, 0.3, 200, 100_000, 12)
    k = s.verdict_counts[OutcomeClass.CLUSTERING.value]
    return k >= 190, f"{k}/200 clustered with opposite group labels"


@criterion(13, "boundary clustering, weakly balanced complete graph")
def c13():
    g = gen.complete_from_groups([{1, 2}, {3}, {4}])
    assert check_weak_balance(g).verdict is Verdict.WEAK
    s = _clustering_share(g, 0.3, 200, 100_000, 13)
    k = s.verdict_counts[OutcomeClass.CLUSTERING.value]
    return k >= 180, f"{k}/200 clustered with per-group labels"


@criterion(14, "boundary oscillation without balance")
def c14():
    g = gen.square_with_diagonals()
    kappa = connectivity_report(g).positive_vertex_connectivity_ge_2
    s = _clustering_share(g, 0.7, 100, 1_000_000, 14)
    k = s.verdict_counts[OutcomeClass.OSCILLATING.value]
    return kappa and k >= 90, f"kappa(G+)>=2: {kappa}; {k}/100 oscillating"


@criterion(15, "balance verdicts against brute force")
def c15():
    rng = np.random.default_rng(15)
    strong_bad = weak_bad = 0
    n_strong_bal = n_weak_bal = 0
    for k in range(500):
        g = gen.random_signed_graph(int(rng.integers(3, 13)), rng, p_extra=float(rng.uniform(0.05, 0.5)),
                                    balanced=bool(k % 2))
        res = check_structural_balance(g)
        brute = strong_balance_bruteforce(g)
        if brute is None:
            strong_bad += res.verdict is not Verdict.UNBALANCED
        else:
            n_strong_bal += 1
            strong_bad += res.verdict is not Verdict.STRONG or tuple(res.partition) != brute
    for k in range(500):
        g = gen.random_signed_graph(int(rng.integers(3, 9)), rng, p_extra=float(rng.uniform(0.05, 0.6)),
                                    p_negative=float(rng.uniform(0.1, 0.9)))
        res = check_weak_balance(g)
        brute = weak_balance_bruteforce(g)
        n_weak_bal += brute
        weak_bad += (res.verdict is Verdict.WEAK) != brute
    return strong_bad == 0 and weak_bad == 0, (
        f"strong mismatches {strong_bad}/500 ({n_strong_bal} balanced), weak mismatches {weak_bad}/500 ({n_weak_bal} balanced)"
    )


@criterion(16, "quadratic form identity")
def c16():
    rng = np.random.default_rng(16)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        g = gen.random_signed_graph(n, rng, p_extra=float(rng.uniform(0.1, 0.7)))
        x = rng.normal(size=n)
        mb = build_matrices(g)
        for rule, L in (("opposing", mb.L_opposing), ("repelling", mb.L_repelling)):
            edge_sum = quadratic_form(g, rule, x)
            matrix = float(x @ L @ x)
            denom = max(abs(edge_sum), quadratic_form_scale(g, rule, x), 1e-300)
            worst = max(worst, abs(edge_sum - matrix) / denom)
    return worst <= 1e-12, f"max relative gap {worst:.2e} over 2000 evaluations"


@criterion(17, "byte-identical gossip reruns")
def c17():
    with tempfile.TemporaryDirectory() as tmp:
        gpath = os.path.join(tmp, "t2.graph")
        with open(gpath, "w", encoding="utf-8") as fh:
            fh.write("signet-graph v1\nn 3\ndirected 0\n1 2 +1\n1 3 -1\n2 3 -1\n")
        blobs = []
        for k in range(2):
            out = os.path.join(tmp, f"run{k}")
            cmd = [sys.executable, "-m", "signet.cli", "gossip", "--graph", gpath, "--rule", "opposing",
                   "--alpha", "0.2", "--beta", "0.2", "--x0", "uniform:-1:1:5", "--runs", "20",
                   "--steps", "5000", "--seed", "17", "--out", out, "--json"]
            proc = subprocess.run(cmd, capture_output=True, text=True)
            if proc.returncode != 0:
                return False, f"exit {proc.returncode}: {proc.stderr.strip()[-200:]}"
            with open(os.path.join(out, "summary.json"), "rb") as fh:
                blobs.append(fh.read())
    return blobs[0] == blobs[1], f"summary.json {len(blobs[0])} bytes, identical={blobs[0] == blobs[1]}"


def run_all(only=None) -> list[CriterionResult]:
    ids = sorted(CRITERIA) if not only else sorted(int(i) for i in only)
    return [CRITERIA[i]() for i in ids]

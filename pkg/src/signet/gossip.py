"""Randomized pairwise (gossip) dynamics on signed graphs.

One event picks an edge ``{i, j}`` with probability ``(1/deg_i + 1/deg_j)/n``
and updates only its two endpoints. With a bound ``A`` each updated endpoint
is clamped to ``[-A, A]``.

Randomness comes from numpy's Philox counter-based generator keyed by the
seed, so a (seed, config) pair pins down every trajectory on every platform.
Random initial states use a second key word so they never share uniforms
with pair selection.
Edges are drawn by inverse CDF over the canonical edge order. The hot loop is
a numba kernel fed with blocks of pre-drawn edge indices; a pure-Python
reference path draws one uniform at a time and must agree bit for bit.
"""

from __future__ import annotations

import bisect
import enum
import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .deterministic import LimitKind, LimitPrediction, Trajectory, diagnostics
from .errors import (
    DirectedGraphUnsupported,
    DisconnectedGraph,
    MonitorsMissing,
    ParameterRangeViolation,
    ProbabilityNotNormalized,
    SignetError,
)
from .graph import Edge, SignedGraph, Verdict, check_structural_balance, check_weak_balance, is_connected
from .laplacian import DynamicsConfig, Rule, gauge, pair_coefficients, pair_update_matrix

RNG_NAME = "numpy.random.Philox(key=seed)"
BLOCK = 1 << 16
DIVERGE_LEVEL = 1e6
ESCAPE_LEVEL = 1e100
SURVIVOR_LEVEL = 1e3
DEFAULT_CLUSTER_BETA = 10.0
MSE_POINTS = 1000


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox keyed by ``(seed, stream)``; stream 0 selects pairs, stream 1 draws initial states."""
    return np.random.Generator(np.random.Philox(key=int(seed) % 2**64 + (int(stream) << 64)))


def run_seed(master: int, run_index: int) -> int:
    return (int(master) + int(run_index)) % 2**64


def selection_probabilities(g: SignedGraph) -> np.ndarray:
    """``mu({i,j}) = (1/deg_i + 1/deg_j)/n`` in canonical edge order."""
    if g.directed:
        raise DirectedGraphUnsupported("the gossip model lives on undirected graphs")
    deg = [d[0] for d in g.degrees]
    return np.array([(1.0 / deg[e.u - 1] + 1.0 / deg[e.v - 1]) / g.n for e in g.edges])


def default_large_beta(alpha: float) -> float:
    """Smallest coupling meeting every explicit large-beta condition for the projected dynamics."""
    cands = [3.0, 1.0 / alpha]
    if alpha > 0.5:
        cands.append(2.0 / (2.0 * alpha - 1.0))
    return max(cands)


def lemma1_constant(alpha: float) -> float:
    return min(abs(2.0 * alpha - 1.0), 0.5)


def _lemma1_check(cfg: DynamicsConfig):
    if cfg.rule is not Rule.OPPOSING:
        raise ParameterRangeViolation("the max-magnitude bound applies to the opposing rule")
    if cfg.alpha == 0.5:
        raise ParameterRangeViolation("alpha = 1/2 gives a zero lower bound")
    if cfg.beta < 3.0:
        raise ParameterRangeViolation("the lower bound needs beta >= 3")


def _lemma1_applies(cfg: DynamicsConfig) -> bool:
    return cfg.rule is Rule.OPPOSING and cfg.alpha != 0.5 and cfg.beta >= 3.0 and cfg.bound_A is None


@dataclass
class GossipProcess:
    graph: SignedGraph
    seed: int = 0
    mu: np.ndarray = None
    rng: np.random.Generator = field(default=None, repr=False)

    def __post_init__(self):
        g = self.graph
        if g.directed:
            raise DirectedGraphUnsupported("the gossip model lives on undirected graphs")
        if not is_connected(g):
            raise DisconnectedGraph("gossip needs a connected graph")
        if self.mu is None:
            self.mu = selection_probabilities(g)
        self.mu = np.asarray(self.mu, dtype=float)
        if self.mu.shape != (len(g.edges),) or np.any(self.mu <= 0):
            raise ProbabilityNotNormalized("need one positive probability per edge")
        if abs(math.fsum(self.mu) - 1.0) > 1e-14:
            raise ProbabilityNotNormalized(f"selection probabilities sum to {math.fsum(self.mu)!r}")
        cdf = np.cumsum(self.mu)
        cdf[-1] = 1.0
        self.cdf = cdf
        self._cdf_list = cdf.tolist()
        self.eu = np.array([e.u - 1 for e in g.edges], dtype=np.int64)
        self.ev = np.array([e.v - 1 for e in g.edges], dtype=np.int64)
        if self.rng is None:
            self.rng = make_rng(self.seed)

    def reseed(self, seed: int):
        self.seed = seed
        self.rng = make_rng(seed)

    def draw_indices(self, m: int) -> np.ndarray:
        return np.searchsorted(self.cdf, self.rng.random(m), side="right")

    def coefficients(self, cfg: DynamicsConfig):
        cs = np.empty(len(self.graph.edges))
        co = np.empty(len(self.graph.edges))
        for k, e in enumerate(self.graph.edges):
            cs[k], co[k] = pair_coefficients(e.sign, e.weight, cfg)
        return cs, co


def sample_pair(p: GossipProcess) -> Edge:
    """Draw one edge with probability ``mu``; advances the generator by one uniform."""
    return p.graph.edges[bisect.bisect_right(p._cdf_list, p.rng.random())]


def gossip_step(x, edge: Edge, cfg: DynamicsConfig) -> np.ndarray:
    """New state after ``edge``'s endpoints interact; other entries are copied untouched."""
    x = np.array(x, dtype=float)
    i, j = edge.u - 1, edge.v - 1
    cs, co = pair_coefficients(edge.sign, edge.weight, cfg)
    xi, xj = x[i], x[j]
    ni = cs * xi + co * xj
    nj = cs * xj + co * xi
    if cfg.bound_A is not None:
        A = cfg.bound_A
        ni = min(max(ni, -A), A)
        nj = min(max(nj, -A), A)
    x[i] = ni
    x[j] = nj
    return x


# -- monitors ---------------------------------------------------------------------------


@dataclass
class MonitorConfig:
    touch_eps: float = 1e-6  # relative to A
    cluster_tol: float = 1e-6  # relative to A
    settle_fraction: float = 0.2
    k_touch: int = 2
    escape: float = ESCAPE_LEVEL
    record_every: int | None = None  # None: every event up to 1e5 events, coarser beyond


@dataclass
class GossipMonitors:
    horizon: int
    steps_done: int
    bound: float | None
    h_max: float
    spread_max: float
    lemma1_c: float | None
    lemma1_violations: int | None
    escaped: bool
    node_max_abs: np.ndarray
    pair_max_gap: np.ndarray
    touches_low: np.ndarray
    touches_high: np.ndarray
    run_min: np.ndarray
    run_max: np.ndarray
    labels: np.ndarray
    last_unsettled_t: int
    settle_fraction: float = 0.2
    k_touch: int = 2


def _labels(x: np.ndarray, A: float, tol: float) -> np.ndarray:
    lab = np.zeros(len(x), dtype=np.int64)
    lab[x >= A - tol] = 1
    lab[x <= -A + tol] = -1
    return lab


def monitors_from_states(states, bound: float | None = None, lemma1_c: float | None = None,
                         mcfg: MonitorConfig | None = None) -> GossipMonitors:
    """Monitors recomputed from a dense state history (one row per event)."""
    mcfg = mcfg or MonitorConfig()
    X = np.atleast_2d(np.asarray(states, dtype=float))
    T = X.shape[0] - 1
    h, spread, _ = diagnostics(X)
    viol = None
    if lemma1_c is not None:
        viol = int(np.count_nonzero(h[1:] < lemma1_c * h[:-1] - 1e-12))
    gaps = np.abs(X[:, :, None] - X[:, None, :]).max(axis=0)
    n = X.shape[1]
    low = np.zeros(n, dtype=np.int64)
    high = np.zeros(n, dtype=np.int64)
    labels = np.zeros(n, dtype=np.int64)
    last_unsettled = 0
    if bound is not None:
        eps = mcfg.touch_eps * bound
        for side, counts in ((-1, low), (1, high)):
            inside = (X <= -bound + eps) if side < 0 else (X >= bound - eps)
            entries = inside[0].astype(np.int64) + np.count_nonzero(inside[1:] & ~inside[:-1], axis=0)
            counts += entries
        lab = np.stack([_labels(row, bound, mcfg.cluster_tol * bound) for row in X])
        labels = lab[-1]
        bad = np.any(lab == 0, axis=1)
        bad[1:] |= np.any(lab[1:] != lab[:-1], axis=1)
        hits = np.flatnonzero(bad)
        last_unsettled = int(hits[-1]) if hits.size else 0
    return GossipMonitors(
        horizon=T,
        steps_done=T,
        bound=bound,
        h_max=float(h.max()),
        spread_max=float(spread.max()),
        lemma1_c=lemma1_c,
        lemma1_violations=viol,
        escaped=False,
        node_max_abs=np.abs(X).max(axis=0),
        pair_max_gap=gaps,
        touches_low=low,
        touches_high=high,
        run_min=X.min(axis=0),
        run_max=X.max(axis=0),
        labels=labels,
        last_unsettled_t=last_unsettled,
        settle_fraction=mcfg.settle_fraction,
        k_touch=mcfg.k_touch,
    )


@njit(cache=True)
def _gossip_kernel(x, idx, eu, ev, cs, co, bound, t0, lemma_c, escape, touch_eps, cluster_tol,
                   fstate, istate, node_max, pair_max, low_in, high_in, low_cnt, high_cnt,
                   run_min, run_max, labels, target, mse_acc, mse_stride, rec, rec_stride):
    # fstate: h_prev, h_max, spread_max ; istate: violations, last_unsettled, escaped, steps, zero_labels
    n = x.shape[0]
    for k in range(idx.shape[0]):
        e = idx[k]
        i = eu[e]
        j = ev[e]
        xi = x[i]
        xj = x[j]
        ni = cs[e] * xi + co[e] * xj
        nj = cs[e] * xj + co[e] * xi
        if bound > 0.0:
            if ni > bound:
                ni = bound
            elif ni < -bound:
                ni = -bound
            if nj > bound:
                nj = bound
            elif nj < -bound:
                nj = -bound
        x[i] = ni
        x[j] = nj
        t = t0 + k + 1

        h = 0.0
        lo = x[0]
        hi = x[0]
        for m in range(n):
            a = abs(x[m])
            if a > h:
                h = a
            if x[m] < lo:
                lo = x[m]
            if x[m] > hi:
                hi = x[m]
        if lemma_c > 0.0 and h < lemma_c * fstate[0] - 1e-12:
            istate[0] += 1
        fstate[0] = h
        if h > fstate[1]:
            fstate[1] = h
        if hi - lo > fstate[2]:
            fstate[2] = hi - lo

        changed = False
        for s in range(2):
            node = i if s == 0 else j
            v = x[node]
            if abs(v) > node_max[node]:
                node_max[node] = abs(v)
            for m in range(n):
                gap = abs(v - x[m])
                if gap > pair_max[node, m]:
                    pair_max[node, m] = gap
                    pair_max[m, node] = gap
            if v < run_min[node]:
                run_min[node] = v
            if v > run_max[node]:
                run_max[node] = v
            if bound > 0.0:
                low = v <= -bound + touch_eps
                high = v >= bound - touch_eps
                if low and not low_in[node]:
                    low_cnt[node] += 1
                if high and not high_in[node]:
                    high_cnt[node] += 1
                low_in[node] = low
                high_in[node] = high
                lab = 0
                if v >= bound - cluster_tol:
                    lab = 1
                elif v <= -bound + cluster_tol:
                    lab = -1
                if lab != labels[node]:
                    if labels[node] == 0:
                        istate[4] -= 1
                    if lab == 0:
                        istate[4] += 1
                    labels[node] = lab
                    changed = True
        if bound > 0.0 and (changed or istate[4] > 0):
            istate[1] = t

        if mse_stride > 0 and t % mse_stride == 0:
            acc = 0.0
            for m in range(n):
                d = x[m] - target[m]
                acc += d * d
            mse_acc[t // mse_stride] += acc
        if rec_stride > 0 and t % rec_stride == 0:
            for m in range(n):
                rec[t // rec_stride, m] = x[m]
        istate[3] = t
        if not h <= escape:
            istate[2] = 1
            return


class _RunState:
    """Kernel-side buffers for one run."""

    def __init__(self, x0, horizon, bound, cfg_lemma_c, mcfg: MonitorConfig, target, mse_acc, mse_stride, rec_stride):
        n = len(x0)
        self.x = np.array(x0, dtype=float)
        self.bound = -1.0 if bound is None else float(bound)
        self.A = bound
        self.lemma_c = -1.0 if cfg_lemma_c is None else float(cfg_lemma_c)
        self.touch_eps = 0.0 if bound is None else mcfg.touch_eps * bound
        self.cluster_tol = 0.0 if bound is None else mcfg.cluster_tol * bound
        h0 = float(np.abs(self.x).max())
        self.fstate = np.array([h0, h0, float(self.x.max() - self.x.min())])
        self.istate = np.zeros(5, dtype=np.int64)
        self.node_max = np.abs(self.x)
        self.pair_max = np.abs(self.x[:, None] - self.x[None, :])
        self.run_min = self.x.copy()
        self.run_max = self.x.copy()
        if bound is not None:
            self.low_in = self.x <= -bound + self.touch_eps
            self.high_in = self.x >= bound - self.touch_eps
            self.labels = _labels(self.x, bound, self.cluster_tol)
        else:
            self.low_in = np.zeros(n, dtype=np.bool_)
            self.high_in = np.zeros(n, dtype=np.bool_)
            self.labels = np.zeros(n, dtype=np.int64)
        self.low_cnt = self.low_in.astype(np.int64)
        self.high_cnt = self.high_in.astype(np.int64)
        self.istate[4] = int(np.count_nonzero(self.labels == 0)) if bound is not None else 0
        self.target = np.zeros(n) if target is None else np.asarray(target, dtype=float)
        self.mse_acc = mse_acc if mse_acc is not None else np.zeros(1)
        self.mse_stride = mse_stride if target is not None and mse_acc is not None else 0
        if self.mse_stride:
            self.mse_acc[0] += float(((self.x - self.target) ** 2).sum())
        self.rec_stride = rec_stride
        rows = horizon // rec_stride + 1 if rec_stride > 0 else 1
        self.rec = np.zeros((rows, n))
        self.rec[0] = self.x
        self.escape = mcfg.escape
        self.mcfg = mcfg
        self.horizon = horizon

    def advance(self, idx: np.ndarray, t0: int):
        _gossip_kernel(self.x, idx, self.eu, self.ev, self.cs, self.co, self.bound, t0, self.lemma_c,
                       self.escape, self.touch_eps, self.cluster_tol, self.fstate, self.istate,
                       self.node_max, self.pair_max, self.low_in, self.high_in, self.low_cnt,
                       self.high_cnt, self.run_min, self.run_max, self.labels, self.target,
                       self.mse_acc, self.mse_stride, self.rec, self.rec_stride)

    @property
    def escaped(self) -> bool:
        return bool(self.istate[2])

    def monitors(self) -> GossipMonitors:
        return GossipMonitors(
            horizon=self.horizon,
            steps_done=int(self.istate[3]),
            bound=self.A,
            h_max=float(self.fstate[1]),
            spread_max=float(self.fstate[2]),
            lemma1_c=None if self.lemma_c < 0 else self.lemma_c,
            lemma1_violations=None if self.lemma_c < 0 else int(self.istate[0]),
            escaped=self.escaped,
            node_max_abs=self.node_max.copy(),
            pair_max_gap=self.pair_max.copy(),
            touches_low=self.low_cnt.copy(),
            touches_high=self.high_cnt.copy(),
            run_min=self.run_min.copy(),
            run_max=self.run_max.copy(),
            labels=self.labels.copy(),
            last_unsettled_t=int(self.istate[1]),
            settle_fraction=self.mcfg.settle_fraction,
            k_touch=self.mcfg.k_touch,
        )


def _record_stride(horizon: int, mcfg: MonitorConfig) -> int:
    if mcfg.record_every is not None:
        return int(mcfg.record_every)
    return 1 if horizon <= 100_000 else -(-horizon // 100_000)


def _execute(p: GossipProcess, cfg: DynamicsConfig, x0, horizon: int, mcfg: MonitorConfig,
             target=None, mse_acc=None, mse_stride: int = 0, record: bool = True) -> _RunState:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (p.graph.n,):
        raise ValueError(f"x0 must have length {p.graph.n}")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    lemma_c = lemma1_constant(cfg.alpha) if _lemma1_applies(cfg) else None
    st = _RunState(x0, horizon, cfg.bound_A, lemma_c, mcfg, target, mse_acc, mse_stride,
                   _record_stride(horizon, mcfg) if record else 0)
    st.eu, st.ev = p.eu, p.ev
    st.cs, st.co = p.coefficients(cfg)
    done = 0
    while done < horizon and not st.escaped:
        m = min(BLOCK, horizon - done)
        st.advance(p.draw_indices(m), done)
        done += m
    return st


def _trajectory_from(st: _RunState) -> Trajectory:
    steps = int(st.istate[3])
    if st.rec_stride > 0:
        rows = steps // st.rec_stride + 1
        times = list(np.arange(rows) * st.rec_stride)
        states = [r for r in st.rec[:rows]]
        if times[-1] != steps:
            times.append(steps)
            states.append(st.x.copy())
    else:
        times = [0, steps]
        states = [st.rec[0], st.x.copy()]
    status = "diverged" if st.escaped else "horizon"
    return Trajectory(np.array(times), np.array(states), status=status, monitors=st.monitors())


def run_trajectory(p: GossipProcess, cfg: DynamicsConfig, x0, horizon: int,
                   monitors: MonitorConfig | None = None) -> Trajectory:
    """Apply ``horizon`` random pairwise events starting from ``x0``.

    States are recorded every event up to 1e5 events (coarser beyond, see
    ``MonitorConfig.record_every``); monitors always see every event.
    """
    mcfg = monitors or MonitorConfig()
    return _trajectory_from(_execute(p, cfg, x0, horizon, mcfg))


def run_trajectory_reference(p: GossipProcess, cfg: DynamicsConfig, x0, horizon: int) -> Trajectory:
    """Event-by-event Python path with one uniform per event; a cross-check for the kernel."""
    x = np.array(x0, dtype=float)
    rows = [x]
    for _ in range(horizon):
        x = gossip_step(x, sample_pair(p), cfg)
        rows.append(x)
    return Trajectory(np.arange(horizon + 1), np.array(rows))


def lemma1_monitor(traj: Trajectory, cfg: DynamicsConfig) -> int:
    """Number of events with ``h(t+1) < c h(t) - 1e-12``, ``c = min(|2 alpha - 1|, 1/2)``."""
    _lemma1_check(cfg)
    t = np.asarray(traj.times)
    if len(t) > 1 and np.any(np.diff(t) != 1):
        raise ValueError("the lower-bound check needs every event recorded")
    c = lemma1_constant(cfg.alpha)
    return int(np.count_nonzero(traj.h[1:] < c * traj.h[:-1] - 1e-12))


# -- outcomes ----------------------------------------------------------------------------


class OutcomeClass(str, enum.Enum):
    BIPARTITE = "BipartiteConsensus"
    ZERO = "ZeroConsensus"
    AVERAGE = "AverageConsensus"
    CLUSTERING = "BoundaryClustering"
    OSCILLATING = "Oscillating"
    DIVERGING = "Diverging"
    UNDECIDED = "Undecided"


@dataclass(frozen=True)
class OutcomeContext:
    limit: tuple | None = None
    tol: float = 1e-3
    partition: tuple | None = None  # node sets, 1-based
    opposite_labels: bool = False  # two groups must end on opposite boundaries
    diverge_level: float = DIVERGE_LEVEL


@dataclass(frozen=True)
class Outcome:
    cls: OutcomeClass
    limit: tuple | None = None
    group_labels: tuple | None = None  # one of -A/+A per partition set


def _group_labels(labels, partition, opposite):
    out = []
    for group in partition:
        vals = {int(labels[i - 1]) for i in group}
        if len(vals) != 1 or 0 in vals:
            return None
        out.append(vals.pop())
    if opposite and (len(out) != 2 or out[0] != -out[1]):
        return None
    return out


def classify_outcome(traj: Trajectory, context: OutcomeContext | None = None) -> Outcome:
    m = traj.monitors
    if m is None:
        raise MonitorsMissing("trajectory was produced without monitors")
    ctx = context or OutcomeContext()
    if max(m.h_max, m.spread_max) > ctx.diverge_level or m.escaped:
        return Outcome(OutcomeClass.DIVERGING)
    x = traj.final
    if m.bound is not None:
        A = m.bound
        settled = bool(np.all(m.labels != 0)) and m.last_unsettled_t <= m.horizon * (1.0 - m.settle_fraction)
        if settled and ctx.partition is not None:
            lab = _group_labels(m.labels, ctx.partition, ctx.opposite_labels)
            if lab is not None:
                return Outcome(OutcomeClass.CLUSTERING, tuple(A * v for v in lab), tuple(A * v for v in lab))
        if np.all(m.touches_low >= m.k_touch) and np.all(m.touches_high >= m.k_touch):
            return Outcome(OutcomeClass.OSCILLATING)
        return Outcome(OutcomeClass.UNDECIDED)
    if ctx.limit is None:
        return Outcome(OutcomeClass.UNDECIDED)
    limit = np.asarray(ctx.limit, dtype=float)
    if np.abs(x - limit).max() > ctx.tol:
        return Outcome(OutcomeClass.UNDECIDED)
    if np.abs(limit).max() <= ctx.tol:
        return Outcome(OutcomeClass.ZERO, tuple(limit))
    if limit.max() - limit.min() <= ctx.tol:
        return Outcome(OutcomeClass.AVERAGE, tuple(limit))
    return Outcome(OutcomeClass.BIPARTITE, tuple(limit))


def no_survivor_holds(m: GossipMonitors, rule: Rule, level: float = SURVIVOR_LEVEL) -> bool:
    """Every node (opposing) or every pair (repelling) went beyond ``level`` at some time."""
    if rule is Rule.OPPOSING:
        return bool(np.all(m.node_max_abs > level))
    n = len(m.node_max_abs)
    off = ~np.eye(n, dtype=bool)
    return bool(np.all(m.pair_max_gap[off] > level))


# -- limits and second moments ---------------------------------------------------------


def predict_gossip_limit(g: SignedGraph, cfg: DynamicsConfig, x0, mu=None) -> LimitPrediction:
    """Almost-sure limit of the unprojected gossip dynamics, when one is guaranteed."""
    from .spectral import critical_beta_gossip, mean_square_factor

    x = np.asarray(x0, dtype=float)
    n = g.n
    if cfg.bound_A is not None:
        return LimitPrediction(LimitKind.UNKNOWN, reason="projected dynamics cluster instead of converging")
    try:
        if cfg.rule is Rule.OPPOSING:
            bal = check_structural_balance(g)
            if mean_square_factor(g, cfg, mu) >= 1.0:
                return LimitPrediction(LimitKind.UNKNOWN, reason="no mean-square contraction")
            if bal.negative_empty:
                return LimitPrediction(LimitKind.AVERAGE, np.full(n, x.mean()))
            if bal.verdict is Verdict.STRONG:
                K = np.array(bal.gauge, dtype=float)
                return LimitPrediction(LimitKind.BIPARTITE, K * (K @ x) / n, np.full(n, 1.0 / n))
            return LimitPrediction(LimitKind.ZERO, np.zeros(n))
        b_star = critical_beta_gossip(g, cfg.alpha, mu)
        if cfg.beta < b_star:
            return LimitPrediction(LimitKind.AVERAGE, np.full(n, x.mean()), np.full(n, 1.0 / n))
        return LimitPrediction(LimitKind.UNKNOWN, reason=f"beta not below the gossip threshold {b_star:.9g}")
    except SignetError as exc:
        return LimitPrediction(LimitKind.UNKNOWN, reason=str(exc))


def empirical_second_moment(p: GossipProcess, cfg: DynamicsConfig, samples: int, gauge_form: bool = False):
    """Sample mean of ``W_t^2`` (``K W_t^2 K`` with ``gauge_form``) and per-entry standard errors."""
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples")
    g = p.graph
    K = gauge(g) if gauge_form else None
    counts = np.zeros(len(g.edges), dtype=np.int64)
    done = 0
    while done < samples:
        m = min(BLOCK, samples - done)
        counts += np.bincount(p.draw_indices(m), minlength=len(g.edges))
        done += m
    freq = counts / samples
    mats = []
    for e in g.edges:
        W = pair_update_matrix(g.n, e.u - 1, e.v - 1, *pair_coefficients(e.sign, e.weight, cfg))
        W2 = W @ W
        if K is not None:
            W2 = K[:, None] * W2 * K[None, :]
        mats.append(W2)
    mats = np.array(mats)
    mean = np.tensordot(freq, mats, axes=1)
    var = np.tensordot(freq, (mats - mean[None]) ** 2, axes=1)
    return mean, np.sqrt(var / samples)


# -- Monte Carlo -----------------------------------------------------------------------


@dataclass(frozen=True)
class UniformBox:
    lo: float
    hi: float
    seed: int

    def draw(self, n: int, run_index: int) -> np.ndarray:
        return make_rng(run_seed(self.seed, run_index), stream=1).uniform(self.lo, self.hi, n)

    def __str__(self):
        return f"uniform:{self.lo!r}:{self.hi!r}:{self.seed}"


def parse_x0_spec(spec: str, n: int | None = None):
    """``uniform:lo:hi:seed`` or a comma/space separated vector."""
    spec = spec.strip()
    if spec.startswith("uniform:"):
        parts = spec.split(":")
        if len(parts) != 4:
            raise ValueError("expected uniform:lo:hi:seed")
        lo, hi = float(parts[1]), float(parts[2])
        if not lo < hi:
            raise ValueError("uniform box needs lo < hi")
        return UniformBox(lo, hi, int(parts[3]))
    vals = np.array([float(t) for t in spec.replace(",", " ").split()])
    if n is not None and len(vals) != n:
        raise ValueError(f"x0 must have {n} entries, got {len(vals)}")
    return vals


def initial_state(x0_spec, n: int, run_index: int) -> np.ndarray:
    if isinstance(x0_spec, UniformBox):
        return x0_spec.draw(n, run_index)
    x = np.array(x0_spec, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"x0 must have length {n}")
    return x


def default_context(g: SignedGraph, cfg: DynamicsConfig, limit=None, tol: float = 1e-3) -> OutcomeContext:
    partition = None
    opposite = False
    if cfg.bound_A is not None:
        try:
            strong = check_structural_balance(g)
            if strong.verdict is Verdict.STRONG:
                partition, opposite = strong.partition, True
            else:
                weak = check_weak_balance(g)
                if weak.verdict is Verdict.WEAK:
                    partition = weak.partition
        except SignetError:
            pass
    if partition is not None:
        partition = tuple(tuple(sorted(s)) for s in partition)
    return OutcomeContext(None if limit is None else tuple(float(v) for v in limit), tol, partition, opposite)


def _check_projection_regime(g: SignedGraph, cfg: DynamicsConfig, ctx: OutcomeContext):
    """Warn when the projected dynamics run outside the regimes with a known outcome."""
    if cfg.bound_A is None:
        return
    if ctx.partition is not None:
        if not g.is_complete() or cfg.alpha >= 0.5:
            warnings.warn("boundary clustering is only known for complete graphs with alpha < 1/2; "
                          "expect Undecided verdicts", stacklevel=3)
    elif cfg.alpha <= 0.5:
        warnings.warn("boundary oscillation is only known for alpha in (1/2, 1); expect Undecided verdicts",
                      stacklevel=3)


@dataclass
class MonteCarloSummary:
    runs: int
    horizon: int
    seed: int
    rule: str
    alpha: float
    beta: float
    bound_A: float | None
    x0_spec: str
    prediction: str
    outcomes: list
    terminal_states: np.ndarray
    verdict_counts: dict
    mse_t: np.ndarray | None
    mse: np.ndarray | None
    touches_low: np.ndarray
    touches_high: np.ndarray
    lemma1_violations: int | None
    diverging_runs: int
    no_survivor_runs: int
    steps_done: list

    def as_dict(self) -> dict:
        if self.mse is not None and len(self.mse) > MSE_POINTS:
            stride = -(-len(self.mse) // MSE_POINTS)
            keep = np.arange(0, len(self.mse), stride)
            mse_t, mse = self.mse_t[keep], self.mse[keep]
        else:
            mse_t, mse = self.mse_t, self.mse
        return {
            "rng": RNG_NAME,
            "runs": self.runs,
            "horizon": self.horizon,
            "seed": self.seed,
            "rule": self.rule,
            "alpha": self.alpha,
            "beta": self.beta,
            "bound_A": self.bound_A,
            "x0": self.x0_spec,
            "prediction": self.prediction,
            "verdict_counts": dict(self.verdict_counts),
            "outcomes": list(self.outcomes),
            "terminal_states": [[float(v) for v in row] for row in self.terminal_states],
            "steps_done": list(self.steps_done),
            "mse_curve": None if mse is None else {"t": [int(t) for t in mse_t], "mse": [float(v) for v in mse]},
            "touch_counts": {"low": [int(c) for c in self.touches_low], "high": [int(c) for c in self.touches_high]},
            "lemma1_violations": self.lemma1_violations,
            "no_survivor": {"diverging_runs": self.diverging_runs, "all_escaped_runs": self.no_survivor_runs},
        }

    def to_json(self) -> str:
        return json.dumps(_finite(self.as_dict()), sort_keys=True, indent=1) + "\n"


def _finite(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def monte_carlo(p: GossipProcess, cfg: DynamicsConfig, x0_spec, runs: int, horizon: int,
                monitors: MonitorConfig | None = None, context: OutcomeContext | None = None,
                tol: float = 1e-3, mse_stride: int | None = None) -> MonteCarloSummary:
    """Independent runs with seeds ``p.seed + run_index``, reduced in run order.

    Each run is classified with ``classify_outcome``; the mean-square error is
    measured against that run's predicted limit when one exists.
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    g = p.graph
    n = g.n
    mcfg = monitors or MonitorConfig()
    if mse_stride is None:
        mse_stride = max(1, -(-horizon // 100_000))
    mse_acc = np.zeros(horizon // mse_stride + 1)
    have_mse = True
    outcomes, finals, steps = [], [], []
    low = np.zeros(n, dtype=np.int64)
    high = np.zeros(n, dtype=np.int64)
    lemma_total = 0 if _lemma1_applies(cfg) else None
    diverging = survivors = 0
    kinds = set()
    base_ctx = context or default_context(g, cfg, tol=tol)
    _check_projection_regime(g, cfg, base_ctx)
    for r in range(runs):
        x0 = initial_state(x0_spec, n, r)
        pred = predict_gossip_limit(g, cfg, x0, p.mu)
        kinds.add(pred.kind.value)
        target = pred.limit
        if target is None:
            have_mse = False
        proc = GossipProcess(g, run_seed(p.seed, r), p.mu)
        st = _execute(proc, cfg, x0, horizon, mcfg, target=target,
                      mse_acc=mse_acc if target is not None else None, mse_stride=mse_stride, record=False)
        traj = _trajectory_from(st)
        ctx = base_ctx
        if target is not None and base_ctx.limit is None:
            ctx = replace(base_ctx, limit=tuple(float(v) for v in target))
        out = classify_outcome(traj, ctx)
        outcomes.append(out.cls.value)
        finals.append(traj.final)
        steps.append(int(st.istate[3]))
        mon = traj.monitors
        low += mon.touches_low
        high += mon.touches_high
        if lemma_total is not None:
            lemma_total += mon.lemma1_violations
        if out.cls is OutcomeClass.DIVERGING:
            diverging += 1
            survivors += no_survivor_holds(mon, cfg.rule)
    counts = {c.value: 0 for c in OutcomeClass}
    for o in outcomes:
        counts[o] += 1
    return MonteCarloSummary(
        runs=runs,
        horizon=horizon,
        seed=p.seed,
        rule=cfg.rule.value,
        alpha=cfg.alpha,
        beta=cfg.beta,
        bound_A=cfg.bound_A,
        x0_spec=str(x0_spec) if isinstance(x0_spec, UniformBox) else ",".join(repr(float(v)) for v in x0_spec),
        prediction="/".join(sorted(kinds)),
        outcomes=outcomes,
        terminal_states=np.array(finals),
        verdict_counts=counts,
        mse_t=np.arange(len(mse_acc)) * mse_stride if have_mse else None,
        mse=mse_acc / runs if have_mse else None,
        touches_low=low,
        touches_high=high,
        lemma1_violations=lemma_total,
        diverging_runs=diverging,
        no_survivor_runs=survivors,
        steps_done=steps,
    )

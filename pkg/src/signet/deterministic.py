"""Deterministic network dynamics: discrete, continuous-time and switching.

Also holds closed-form limit predictions and the ``Trajectory`` container that
the gossip simulator reuses.
"""

from __future__ import annotations

import enum
import io
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SignetError, StepConditionViolated
from .graph import SignedGraph, Verdict, check_structural_balance
from .laplacian import DynamicsConfig, Rule, build_matrices, update_matrix, weighted_laplacian
from .spectral import (
    critical_beta_deterministic,
    spectral_radius,
    stationary_left_vector,
    symmetric_spectrum,
)

DIVERGENCE_LEVEL = 1e9


def diagnostics(states: np.ndarray):
    """Per-row ``h = max|x_i|``, ``spread = max x - min x`` and Euclidean norm."""
    states = np.atleast_2d(states)
    h = np.abs(states).max(axis=1)
    spread = states.max(axis=1) - states.min(axis=1)
    norm = np.sqrt((states**2).sum(axis=1))
    return h, spread, norm


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    status: str = "horizon"  # converged | diverged | horizon
    h: np.ndarray = None
    spread: np.ndarray = None
    norm: np.ndarray = None
    monitors: object = None

    def __post_init__(self):
        self.times = np.asarray(self.times)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if len(self.times) != self.states.shape[0]:
            raise ValueError("times and states disagree in length")
        if self.h is None:
            self.h, self.spread, self.norm = diagnostics(self.states)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        cols = ["t"] + [f"x{i + 1}" for i in range(self.n)] + ["h", "spread", "norm"]
        buf.write(",".join(cols) + "\n")
        for k, t in enumerate(self.times):
            row = [t] + list(self.states[k]) + [self.h[k], self.spread[k], self.norm[k]]
            buf.write(",".join(_fmt17(v) for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        return text


def _fmt17(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % v


def simulate(g: SignedGraph, cfg: DynamicsConfig, x0, T: int, stop_tol: float = 1e-14,
             patience: int = 10, early_stop: bool = True, stop_on_divergence: bool = True) -> Trajectory:
    """Iterate ``x(t+1) = U x(t)`` for up to ``T`` steps.

    Stops early once the step change stays below ``stop_tol`` (relative to
    ``max(1, h)``) for ``patience`` consecutive steps, or when the state
    exceeds the divergence level (the status is then ``diverged``; with
    ``stop_on_divergence=False`` the run continues to ``T``).
    """
    x = np.array(x0, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"x0 must have length {g.n}")
    if T < 1:
        raise ValueError("T must be at least 1")
    U = update_matrix(g, cfg)
    rows = [x]
    quiet = 0
    status = "horizon"
    for _ in range(T):
        x_new = U @ x
        rows.append(x_new)
        step = np.abs(x_new - x).max()
        x = x_new
        if status != "diverged" and (np.linalg.norm(x) > DIVERGENCE_LEVEL or x.max() - x.min() > DIVERGENCE_LEVEL):
            status = "diverged"
            if stop_on_divergence:
                break
        if not np.all(np.isfinite(x)):
            break
        if early_stop and status != "diverged":
            quiet = quiet + 1 if step < stop_tol * max(1.0, np.abs(x).max()) else 0
            if quiet >= patience:
                status = "converged"
                break
    return Trajectory(np.arange(len(rows)), np.array(rows), status=status)


# -- limit predictions ------------------------------------------------------------------


class LimitKind(str, enum.Enum):
    BIPARTITE = "BipartiteConsensus"
    ZERO = "ZeroConsensus"
    AVERAGE = "AverageConsensus"
    WEIGHTED = "WeightedConsensus"
    DIVERGENT = "Divergent"
    UNKNOWN = "Unknown"


@dataclass
class LimitPrediction:
    kind: LimitKind
    limit: np.ndarray | None = None
    left_vector: np.ndarray | None = None
    reason: str = ""

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "limit": None if self.limit is None else [float(v) for v in self.limit],
            "left_vector": None if self.left_vector is None else [float(v) for v in self.left_vector],
            "reason": self.reason,
        }


def _max_degree(g: SignedGraph) -> float:
    mb = build_matrices(g)
    return float((mb.D_plus + mb.D_minus).diagonal().max())


def _consensus_with(left: np.ndarray, U: np.ndarray, x: np.ndarray, kind: LimitKind, scale=None) -> LimitPrediction:
    n = len(x)
    rest = spectral_radius(U - np.outer(np.ones(n), left))
    if not rest < 1.0:
        return LimitPrediction(LimitKind.UNKNOWN, reason=f"second spectral radius {rest:.6g} is not below 1")
    if scale is None:
        return LimitPrediction(kind, np.full(n, left @ x), left)
    return LimitPrediction(kind, scale * (left @ (scale * x)), left)


def predict_limit(g: SignedGraph, cfg: DynamicsConfig, x0) -> LimitPrediction:
    """Closed-form terminal state of the deterministic dynamics, when one is known."""
    x = np.asarray(x0, dtype=float)
    n = g.n
    U = update_matrix(g, cfg)
    try:
        if cfg.rule is Rule.OPPOSING:
            bal = check_structural_balance(g)
            if cfg.alpha + cfg.beta >= 1.0 / _max_degree(g):
                warnings.warn("alpha + beta >= 1/max deg: outside the guaranteed range", stacklevel=2)
            if bal.negative_empty:
                if g.directed:
                    return _consensus_with(stationary_left_vector(U), U, x, LimitKind.WEIGHTED)
                return _consensus_with(np.full(n, 1.0 / n), U, x, LimitKind.AVERAGE)
            if bal.verdict is Verdict.STRONG:
                K = np.array(bal.gauge, dtype=float)
                Z = K[:, None] * U * K[None, :]
                w = stationary_left_vector(Z) if g.directed else np.full(n, 1.0 / n)
                return _consensus_with(w, Z, x, LimitKind.BIPARTITE, scale=K)
            rho = spectral_radius(U)
            if rho < 1.0:
                return LimitPrediction(LimitKind.ZERO, np.zeros(n))
            return LimitPrediction(LimitKind.UNKNOWN, reason=f"unbalanced but rho(W) = {rho:.6g}")
        if g.directed:
            q = stationary_left_vector(U)
            return _consensus_with(q, U, x, LimitKind.WEIGHTED)
        b_star = critical_beta_deterministic(g, cfg.alpha)
        if cfg.beta < b_star:
            return LimitPrediction(LimitKind.AVERAGE, np.full(n, x.mean()), np.full(n, 1.0 / n))
        if cfg.beta > b_star:
            return LimitPrediction(LimitKind.DIVERGENT, reason=f"beta above beta* = {b_star:.9g}")
        return LimitPrediction(LimitKind.UNKNOWN, reason="beta equals beta*")
    except SignetError as exc:
        return LimitPrediction(LimitKind.UNKNOWN, reason=str(exc))


# -- switching graphs -----------------------------------------------------------------


@dataclass
class SwitchingVerdict:
    modulus_consensus: bool
    y_star: float
    modulus_gap: float


def _step_loads(g: SignedGraph, cfg: DynamicsConfig) -> np.ndarray:
    mb = build_matrices(g)
    return cfg.alpha * mb.D_plus.diagonal() + cfg.beta * mb.D_minus.diagonal()


def simulate_switching(graph_sequence, cfg: DynamicsConfig, x0, T: int, delta: float, tol: float = 1e-6):
    """Run ``x(t+1) = U_t x(t)`` with ``U_t`` built from ``graph_sequence[t % len]``.

    Every step must satisfy ``alpha |N+_i| + beta |N-_i| <= 1 - delta``.
    Returns the trajectory and whether all ``|x_i|`` agree at the horizon.
    """
    seq = list(graph_sequence)
    if not seq:
        raise ValueError("empty graph sequence")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    for t in range(min(T, len(seq))):
        loads = _step_loads(seq[t], cfg)
        bad = np.flatnonzero(loads > 1.0 - delta)
        if bad.size:
            i = int(bad[0])
            raise StepConditionViolated(t, i + 1, delta, float(loads[i]))
    mats = [update_matrix(gk, cfg) for gk in seq]
    x = np.array(x0, dtype=float)
    rows = [x]
    for t in range(T):
        x = mats[t % len(mats)] @ x
        rows.append(x)
    traj = Trajectory(np.arange(T + 1), np.array(rows))
    mod = np.abs(traj.final)
    gap = float(mod.max() - mod.min())
    return traj, SwitchingVerdict(gap <= tol, float(mod.mean()), gap)


def check_joint_connectivity(graph_sequence, window_T: int, periodic: bool = True) -> bool:
    """True iff the union over every window of ``window_T + 1`` consecutive graphs is connected.

    Directed sequences need strong connectivity of each union.
    """
    seq = list(graph_sequence)
    if not seq:
        return False
    n = seq[0].n
    directed = seq[0].directed
    L = len(seq)
    span = window_T + 1
    starts = range(L) if periodic else range(max(1, L - span + 1))
    for s in starts:
        adj = [set() for _ in range(n + 1)]
        radj = [set() for _ in range(n + 1)]
        stop = s + span if periodic else min(s + span, L)
        for k in range(s, stop):
            gk = seq[k % L]
            for e in gk.edges:
                adj[e.u].add(e.v)
                radj[e.v].add(e.u)
                if not directed:
                    adj[e.v].add(e.u)
                    radj[e.u].add(e.v)
        if not (_reaches_all(adj, n) and _reaches_all(radj, n)):
            return False
    return True


def _reaches_all(adj, n) -> bool:
    seen = {1}
    stack = [1]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n


# -- continuous time -------------------------------------------------------------------


def simulate_continuous(g: SignedGraph, cfg: DynamicsConfig, x0, t_end: float, dt: float,
                        method: str = "auto") -> Trajectory:
    """Integrate ``dx/dt = -(alpha L+ + beta L-) x`` on the grid ``0, dt, ..., t_end``.

    ``method="exact"`` uses the eigendecomposition (undirected only), ``"rk4"``
    classical Runge-Kutta; ``"auto"`` picks exact whenever the graph is undirected.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x0 = np.array(x0, dtype=float)
    L = weighted_laplacian(g, cfg)
    steps = int(round(t_end / dt))
    times = np.arange(steps + 1) * dt
    if method == "auto":
        method = "rk4" if g.directed else "exact"
    if method == "exact":
        if g.directed:
            raise ValueError("the exact path needs a symmetric Laplacian")
        lam, V = symmetric_spectrum(L)
        coeff = V.T @ x0
        states = np.exp(-np.outer(times, lam)) * coeff[None, :] @ V.T
    elif method == "rk4":
        states = np.empty((steps + 1, g.n))
        x = x0.copy()
        states[0] = x
        for k in range(steps):
            k1 = -L @ x
            k2 = -L @ (x + 0.5 * dt * k1)
            k3 = -L @ (x + 0.5 * dt * k2)
            k4 = -L @ (x + dt * k3)
            x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            states[k + 1] = x
    else:
        raise ValueError(f"unknown method {method!r}")
    return Trajectory(times, states)

"""Signed Laplacians, update matrices and gossip second-moment matrices.

Every matrix is dense ``numpy`` (n x n). Rows collect in-neighbours, so for a
directed edge ``(j, i)`` the entry lands in row ``i``, column ``j``.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DirectedGraphUnsupported,
    GaugeRequestedOnUnbalancedGraph,
    ProbabilityNotNormalized,
)
from .graph import SignedGraph, Verdict, check_structural_balance


class Rule(str, enum.Enum):
    OPPOSING = "opposing"
    REPELLING = "repelling"


@dataclass(frozen=True)
class DynamicsConfig:
    rule: Rule
    alpha: float
    beta: float
    bound_A: float | None = None
    # continuous-time flows have no step-size limit, so alpha may exceed 1
    continuous: bool = False

    def __post_init__(self):
        object.__setattr__(self, "rule", Rule(self.rule))
        if self.continuous:
            if not self.alpha > 0.0:
                raise ValueError(f"alpha must be positive, got {self.alpha}")
        elif not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.beta >= 0.0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.bound_A is not None and not self.bound_A > 0.0:
            raise ValueError(f"bound_A must be positive, got {self.bound_A}")

    def with_beta(self, beta: float) -> "DynamicsConfig":
        return DynamicsConfig(self.rule, self.alpha, beta, self.bound_A, self.continuous)


@dataclass(frozen=True)
class MatrixBundle:
    D_plus: np.ndarray
    D_minus: np.ndarray
    A_plus: np.ndarray
    A_minus: np.ndarray
    L_plus: np.ndarray
    L_minus_o: np.ndarray
    L_minus_r: np.ndarray

    @property
    def L_opposing(self) -> np.ndarray:
        return self.L_plus + self.L_minus_o

    @property
    def L_repelling(self) -> np.ndarray:
        return self.L_plus + self.L_minus_r


def build_matrices(g: SignedGraph) -> MatrixBundle:
    n = g.n
    A_plus = np.zeros((n, n))
    A_minus = np.zeros((n, n))
    for e in g.edges:
        i, j = e.v - 1, e.u - 1  # row i hears column j
        target = A_plus if e.sign > 0 else A_minus
        target[i, j] = e.sign * e.weight
        if not g.directed:
            target[j, i] = e.sign * e.weight
    D_plus = np.diag(A_plus.sum(axis=1))
    D_minus = np.diag(-A_minus.sum(axis=1))
    return MatrixBundle(
        D_plus=D_plus,
        D_minus=D_minus,
        A_plus=A_plus,
        A_minus=A_minus,
        L_plus=D_plus - A_plus,
        L_minus_o=D_minus - A_minus,
        L_minus_r=-D_minus - A_minus,
    )


def gauge(g: SignedGraph) -> np.ndarray:
    """The +/-1 gauge vector of a strongly balanced graph."""
    res = check_structural_balance(g)
    if res.verdict is not Verdict.STRONG:
        raise GaugeRequestedOnUnbalancedGraph("graph is not structurally balanced")
    return np.array(res.gauge, dtype=float)


def update_matrix(g: SignedGraph, cfg: DynamicsConfig) -> np.ndarray:
    """``W = I - a L+ - b L-o`` for the opposing rule, ``M = I - a L+ - b L-r`` for repelling."""
    mb = build_matrices(g)
    L_neg = mb.L_minus_o if cfg.rule is Rule.OPPOSING else mb.L_minus_r
    return np.eye(g.n) - cfg.alpha * mb.L_plus - cfg.beta * L_neg


def weighted_laplacian(g: SignedGraph, cfg: DynamicsConfig) -> np.ndarray:
    """``a L+ + b L-`` with the rule's negative Laplacian; drives the continuous-time flow."""
    return np.eye(g.n) - update_matrix(g, cfg)


def _edge_terms(g: SignedGraph, rule: Rule, x: np.ndarray) -> list[float]:
    terms = []
    for e in g.edges:
        a, b = x[e.u - 1], x[e.v - 1]
        if e.sign > 0:
            terms.append(e.weight * (a - b) ** 2)
        elif rule is Rule.OPPOSING:
            terms.append(e.weight * (a + b) ** 2)
        else:
            terms.append(-e.weight * (a - b) ** 2)
    return terms


def quadratic_form(g: SignedGraph, rule: Rule | str, x) -> float:
    """Edge-sum evaluation of ``x^T L x`` for the opposing or repelling Laplacian."""
    if g.directed:
        raise DirectedGraphUnsupported("quadratic forms are defined for undirected graphs")
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"state must have length {g.n}")
    return math.fsum(_edge_terms(g, Rule(rule), x))


def quadratic_form_scale(g: SignedGraph, rule: Rule | str, x) -> float:
    """Sum of absolute edge terms; the natural scale for relative error of the form."""
    x = np.asarray(x, dtype=float)
    return math.fsum(abs(t) for t in _edge_terms(g, Rule(rule), x))


def _as_probabilities(g: SignedGraph, mu) -> np.ndarray:
    if isinstance(mu, dict):
        p = []
        for e in g.edges:
            key = (e.u, e.v)
            if key not in mu:
                key = (e.v, e.u)
            if key not in mu:
                raise ProbabilityNotNormalized(f"no probability for edge ({e.u}, {e.v})")
            p.append(mu[key])
        p = np.array(p, dtype=float)
    else:
        p = np.asarray(mu, dtype=float)
    if p.shape != (len(g.edges),):
        raise ProbabilityNotNormalized("need exactly one probability per edge")
    if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ProbabilityNotNormalized(f"edge probabilities must be positive and sum to 1 (sum={p.sum()!r})")
    return p


def probabilistic_laplacians(g: SignedGraph, mu):
    """``(L^p of G+, opposing L^po of G-, repelling L^pr of G-)`` with edge weights ``mu``."""
    if g.directed:
        raise DirectedGraphUnsupported("the gossip model lives on undirected graphs")
    p = _as_probabilities(g, mu)
    n = g.n
    Lp = np.zeros((n, n))
    Lpo = np.zeros((n, n))
    Lpr = np.zeros((n, n))
    for pe, e in zip(p, g.edges):
        i, j = e.u - 1, e.v - 1
        if e.sign > 0:
            Lp[i, j] -= pe
            Lp[j, i] -= pe
            Lp[i, i] += pe
            Lp[j, j] += pe
        else:
            Lpo[i, j] += pe
            Lpo[j, i] += pe
            Lpo[i, i] += pe
            Lpo[j, j] += pe
            Lpr[i, j] += pe
            Lpr[j, i] += pe
            Lpr[i, i] -= pe
            Lpr[j, j] -= pe
    return Lp, Lpo, Lpr


def pair_update_matrix(n: int, i: int, j: int, c_self: float, c_other: float) -> np.ndarray:
    """The one-event matrix moving nodes ``i`` and ``j`` (0-based)."""
    W = np.eye(n)
    W[i, i] = W[j, j] = c_self
    W[i, j] = W[j, i] = c_other
    return W


def pair_coefficients(sign: int, weight: float, cfg: DynamicsConfig) -> tuple[float, float]:
    """``(c_self, c_other)`` for one pairwise update along an edge."""
    if sign > 0:
        a = cfg.alpha * weight
        return 1.0 - a, a
    b = cfg.beta * weight
    if cfg.rule is Rule.OPPOSING:
        return 1.0 - b, -b
    return 1.0 + b, -b


def expected_second_moment(g: SignedGraph, cfg: DynamicsConfig, mu, gauge_form: bool = False) -> np.ndarray:
    """``E[W_t^2]`` of the gossip update (``E[K W_t^2 K]`` when ``gauge_form``).

    Built from the probabilistic Laplacians, with each edge's coupling scaled by
    its weight.
    """
    if gauge_form and cfg.rule is not Rule.OPPOSING:
        raise ValueError("the gauge form applies to the opposing rule")
    K = gauge(g) if gauge_form else None
    p = _as_probabilities(g, mu)
    n = g.n
    if all(e.weight == 1.0 for e in g.edges):
        Lp, Lpo, Lpr = probabilistic_laplacians(g, p)
        a, b = cfg.alpha, cfg.beta
        if cfg.rule is Rule.REPELLING:
            return np.eye(n) - 2 * a * (1 - a) * Lp - 2 * b * (1 + b) * Lpr
        if gauge_form:
            return np.eye(n) - 2 * a * (1 - a) * Lp + 2 * b * (1 - b) * Lpr
        return np.eye(n) - 2 * a * (1 - a) * Lp - 2 * b * (1 - b) * Lpo
    # per-edge couplings: accumulate sum_e p_e W_e^2 directly
    out = np.zeros((n, n))
    for pe, e in zip(p, g.edges):
        W = pair_update_matrix(n, e.u - 1, e.v - 1, *pair_coefficients(e.sign, e.weight, cfg))
        out += pe * (W @ W)
    if K is not None:
        out = K[:, None] * out * K[None, :]
    return out


def write_matrix_csv(M: np.ndarray, path=None) -> str:
    """Row-major CSV with 17 significant digits; returns the text."""
    buf = io.StringIO()
    for row in np.atleast_2d(M):
        buf.write(",".join("%.17g" % v for v in row))
        buf.write("\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text

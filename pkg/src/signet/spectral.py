"""Eigen-analysis of update matrices.

Symmetric spectra come from a cyclic Jacobi eigensolver. Spectral radii of
general matrices come from power iteration carried out by repeated squaring
(``M, M^2, M^4, ...`` with rescaling), which also handles complex or
sign-alternating dominant eigenvalues. Null-space checks use an SVD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import (
    AlphaOutOfRange,
    DirectedGraphUnsupported,
    EigenvalueOneNotSimple,
    NoConvergence,
    NotInConvergenceRegime,
    NotSymmetric,
    PositiveSubgraphDisconnected,
)
from .graph import SignedGraph, Verdict, check_structural_balance, is_connected, is_strongly_connected
from .laplacian import (
    DynamicsConfig,
    Rule,
    build_matrices,
    expected_second_moment,
    probabilistic_laplacians,
    update_matrix,
)

SIMPLE_GAP = 1e-8
NUMERICALLY_ZERO = 1e-12


# -- symmetric eigensolver -------------------------------------------------------


@njit(cache=True)
def _jacobi_sweeps(A, V, tol, max_sweeps):
    n = A.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += A[i, j] * A[i, j]
    scale = math.sqrt(scale)
    if scale == 0.0:
        return 0
    for sweep in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += A[i, j] * A[i, j]
        if math.sqrt(off) <= tol * scale:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = A[k, p]
                    akq = A[k, q]
                    A[k, p] = c * akp - s * akq
                    A[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = A[p, k]
                    aqk = A[q, k]
                    A[p, k] = c * apk - s * aqk
                    A[q, k] = s * apk + c * aqk
                A[p, q] = 0.0
                A[q, p] = 0.0
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = c * vkp - s * vkq
                    V[k, q] = s * vkp + c * vkq
    return -1


def symmetric_spectrum(S, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a symmetric matrix."""
    S = np.array(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("need a square matrix")
    norm = np.abs(S).max() if S.size else 0.0
    if np.abs(S - S.T).max(initial=0.0) > 1e-12 * max(1.0, norm):
        raise NotSymmetric("matrix is not symmetric within 1e-12")
    A = 0.5 * (S + S.T)
    V = np.eye(S.shape[0])
    if _jacobi_sweeps(A, V, tol, max_sweeps) < 0:
        raise NoConvergence(f"Jacobi did not reach off-diagonal norm {tol:g} in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def eigenvalues_sym(S) -> np.ndarray:
    return symmetric_spectrum(S)[0]


def lambda_max(S) -> float:
    return float(eigenvalues_sym(S)[-1])


# -- general matrices --------------------------------------------------------------


def spectral_radius(M, tol: float = 1e-12, deflate: bool = False, max_squarings: int = 64) -> float:
    """rho(M) from the growth of ``||M^(2^k)||``.

    With ``deflate`` the known eigenpair ``(1, ones)`` is removed first by
    passing to ``M - 11^T/n``; this requires ``M 1 = 1``.
    """
    B = np.array(M, dtype=float)
    n = B.shape[0]
    if deflate:
        if np.abs(B.sum(axis=1) - 1.0).max() > 1e-10:
            raise ValueError("deflation needs M @ 1 == 1")
        B = B - np.full((n, n), 1.0 / n)
    nrm = np.linalg.norm(B)
    if nrm == 0.0:
        return 0.0
    S = B / nrm
    log_growth = math.log(nrm)
    prev = None
    for k in range(1, max_squarings + 1):
        S = S @ S
        c = np.linalg.norm(S)
        if c == 0.0:
            return 0.0
        if not np.isfinite(c):
            raise NoConvergence("overflow while squaring")
        S /= c
        log_growth = 2.0 * log_growth + math.log(c)
        est = math.exp(log_growth / 2.0**k)
        if prev is not None and abs(est - prev) <= tol * max(est, 1e-300) and k >= 8:
            return est
        prev = est
    raise NoConvergence(f"spectral radius did not settle in {max_squarings} squarings")


def _null_space_pair(S: np.ndarray):
    """Smallest two singular values of ``S`` and the left/right singular vectors of the smallest."""
    U, sig, Vt = np.linalg.svd(S)
    second = sig[-2] if len(sig) > 1 else np.inf
    return sig[-1], second, U[:, -1], Vt[-1, :]


def stationary_left_vector(M) -> np.ndarray:
    """Left eigenvector of eigenvalue 1, normalized to sum to one."""
    M = np.array(M, dtype=float)
    n = M.shape[0]
    scale = max(1.0, np.linalg.norm(M, 2))
    smallest, second, left, right = _null_space_pair(M - np.eye(n))
    if smallest > 1e-8 * scale:
        raise EigenvalueOneNotSimple("1 is not an eigenvalue of M")
    if second < SIMPLE_GAP * scale or abs(left @ right) < SIMPLE_GAP:
        raise EigenvalueOneNotSimple("eigenvalue 1 is not simple")
    # polish: solve q^T (M - I) = 0 with sum(q) = 1
    system = np.vstack([(M - np.eye(n)).T, np.ones((1, n))])
    rhs = np.zeros(n + 1)
    rhs[-1] = 1.0
    q, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    return q


@dataclass(frozen=True)
class EventualPositivity:
    verdict: bool | None  # None: spectral gap too small to decide
    k0: int | None = None
    witness_found: bool = False
    rho: float = float("nan")
    reason: str = ""


def _positive_vector(v: np.ndarray, tol: float) -> bool:
    v = v / v[np.argmax(np.abs(v))]
    return bool(np.all(v > tol))


def power_witness(M, k_budget: int = 200) -> int | None:
    """Smallest ``k <= k_budget`` with ``M^k, ..., M^(2k)`` all entrywise positive.

    Every ``m >= k`` is a sum of exponents from ``[k, 2k]``, so that window
    forces all later powers positive; the smallest such ``k`` is exactly the
    index from which the powers stay positive.
    """
    M = np.array(M, dtype=float)
    P = np.eye(M.shape[0])
    positive = [False]
    for _ in range(2 * k_budget):
        P = P @ M
        nrm = np.abs(P).max()
        if nrm == 0.0 or not np.isfinite(nrm):
            return None
        P /= nrm
        positive.append(bool(np.all(P > 0)))
    # run[k]: length of the all-positive stretch starting at exponent k
    run = [0] * (2 * k_budget + 2)
    for k in range(2 * k_budget, 0, -1):
        run[k] = run[k + 1] + 1 if positive[k] else 0
    for k in range(1, k_budget + 1):
        if run[k] >= k + 1:
            return k
    return None


def is_eventually_positive(M, k_budget: int = 200, tol: float = 1e-10) -> EventualPositivity:
    """Strong Perron-Frobenius test for ``M`` and ``M^T``, plus a power witness."""
    M = np.array(M, dtype=float)
    n = M.shape[0]
    scale = max(np.linalg.norm(M, 2), 1e-300)
    rho = spectral_radius(M)
    if rho <= NUMERICALLY_ZERO * scale:
        return EventualPositivity(False, rho=rho, reason="spectral radius is zero")
    smallest, second, left, right = _null_space_pair(M - rho * np.eye(n))
    if smallest > 1e-7 * scale:
        return EventualPositivity(False, rho=rho, reason="rho(M) is not a positive eigenvalue")
    if second < NUMERICALLY_ZERO * scale or abs(left @ right) < NUMERICALLY_ZERO:
        return EventualPositivity(False, rho=rho, reason="rho(M) is not a simple eigenvalue")
    if second < SIMPLE_GAP * scale or abs(left @ right) < SIMPLE_GAP:
        return EventualPositivity(None, rho=rho, reason="eigenvalue gap below tie tolerance")
    # every other eigenvalue must be strictly smaller in modulus
    deflated = M - rho * np.outer(right, left) / (left @ right)
    rest = spectral_radius(deflated)
    if rest >= rho * (1.0 - SIMPLE_GAP):
        if rest >= rho * (1.0 - NUMERICALLY_ZERO):
            return EventualPositivity(False, rho=rho, reason="another eigenvalue has modulus rho")
        return EventualPositivity(None, rho=rho, reason="dominance gap below tie tolerance")
    if not (_positive_vector(right, tol) and _positive_vector(left, tol)):
        return EventualPositivity(False, rho=rho, reason="Perron vector has non-positive entries")
    k0 = power_witness(M, k_budget)
    return EventualPositivity(True, k0=k0, witness_found=k0 is not None, rho=rho,
                              reason="" if k0 is not None else f"no power witness within {k_budget}")


# -- critical couplings --------------------------------------------------------------


def _positive_range_checks(g: SignedGraph, alpha: float):
    if g.directed:
        raise DirectedGraphUnsupported("use critical_beta_directed_bound for digraphs")
    if not is_connected(g, 1):
        raise PositiveSubgraphDisconnected("G+ must be connected")
    mb = build_matrices(g)
    dmax = mb.D_plus.diagonal().max()
    if not 0.0 < alpha < 1.0 / dmax:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1/max deg+) = (0, {1.0 / dmax:.6g})")
    return mb


def repelling_gap_function(g: SignedGraph, alpha: float, beta: float) -> float:
    """``lambda_max(I - alpha L+ - beta L-r - J)``; crosses 1 at the critical coupling."""
    mb = build_matrices(g)
    n = g.n
    S = np.eye(n) - alpha * mb.L_plus - beta * mb.L_minus_r - np.full((n, n), 1.0 / n)
    return lambda_max(S)


def _bisect_increasing(f, target: float, steps: int = 200) -> float:
    lo, hi = 0.0, 1.0
    doublings = 0
    while f(hi) <= target:
        lo, hi = hi, 2.0 * hi
        doublings += 1
        if doublings > 60:
            raise NoConvergence("could not bracket the critical coupling")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_beta_deterministic(g: SignedGraph, alpha: float) -> float:
    """Threshold on beta for the discrete repelling dynamics (``inf`` when G- is empty)."""
    mb = _positive_range_checks(g, alpha)
    if not g.negative_edges:
        return math.inf
    n = g.n
    base = np.eye(n) - alpha * mb.L_plus - np.full((n, n), 1.0 / n)
    return _bisect_increasing(lambda b: lambda_max(base - b * mb.L_minus_r), 1.0)


def critical_beta_continuous(g: SignedGraph, alpha: float) -> float:
    """Threshold on beta for the repelling flow ``dx/dt = -(alpha L+ + beta L-r) x``."""
    if g.directed:
        raise DirectedGraphUnsupported("continuous threshold is computed for undirected graphs")
    if not is_connected(g, 1):
        raise PositiveSubgraphDisconnected("G+ must be connected")
    if not alpha > 0:
        raise AlphaOutOfRange("alpha must be positive")
    if not g.negative_edges:
        return math.inf
    mb = build_matrices(g)
    n = g.n
    # J shifts the consensus eigenvalue 0 down to -1, away from the crossing at 0
    base = -alpha * mb.L_plus - np.full((n, n), 1.0 / n)
    return _bisect_increasing(lambda b: lambda_max(base - b * mb.L_minus_r), 0.0)


def critical_beta_directed_bound(g: SignedGraph, alpha: float, grid: int = 2000) -> float:
    """Sup of eta with every non-unit eigenvalue of M inside the unit circle for all beta < eta.

    Reported as an upper bound for consensus, not as a divergence threshold.
    """
    if not is_strongly_connected(g, 1) if g.directed else not is_connected(g, 1):
        raise PositiveSubgraphDisconnected("G+ must be (strongly) connected")
    mb = build_matrices(g)
    dmax = mb.D_plus.diagonal().max()
    if not 0.0 < alpha < 1.0 / dmax:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1/max deg+) = (0, {1.0 / dmax:.6g})")
    if not g.negative_edges:
        return math.inf
    n = g.n

    def h(beta):
        M = np.eye(n) - alpha * mb.L_plus - beta * mb.L_minus_r
        return spectral_radius(M, deflate=True)

    if h(0.0) >= 1.0:
        raise NotInConvergenceRegime("no consensus even without negative coupling")
    hi = 1.0
    while h(hi) < 1.0:
        hi *= 2.0
        if hi > 2.0**60:
            raise NoConvergence("could not bracket the directed threshold")
    # first failure on a grid, then bisect back to the last success
    step = hi / grid
    lo = 0.0
    for k in range(1, grid + 1):
        b = k * step
        if h(b) >= 1.0:
            hi = b
            break
        lo = b
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if h(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def critical_beta_gossip(g: SignedGraph, alpha: float, mu=None) -> float:
    """Largest beta with ``beta(1+beta) < lambda_2(L^p+) / lambda_max(-L^pr-) * alpha(1-alpha)``."""
    from .gossip import selection_probabilities

    if g.directed:
        raise DirectedGraphUnsupported("the gossip model lives on undirected graphs")
    if not is_connected(g, 1):
        raise PositiveSubgraphDisconnected("G+ must be connected")
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange("alpha must lie in (0, 1)")
    if not g.negative_edges:
        return math.inf
    if mu is None:
        mu = selection_probabilities(g)
    Lp, _, Lpr = probabilistic_laplacians(g, mu)
    lam2 = eigenvalues_sym(Lp)[1]
    lam_neg = eigenvalues_sym(-Lpr)[-1]
    r = lam2 / lam_neg * alpha * (1.0 - alpha)
    # positive root of b^2 + b - r = 0, written without cancellation
    return float(2.0 * r / (1.0 + math.sqrt(1.0 + 4.0 * r)))


def mean_square_factor(g: SignedGraph, cfg: DynamicsConfig, mu=None) -> float:
    """Per-event contraction factor of the gossip Lyapunov function ``E[V(t)]``."""
    from .gossip import selection_probabilities

    if mu is None:
        mu = selection_probabilities(g)
    n = g.n
    J = np.full((n, n), 1.0 / n)
    if cfg.rule is Rule.REPELLING:
        return lambda_max(expected_second_moment(g, cfg, mu) - J)
    bal = check_structural_balance(g)
    if bal.verdict is Verdict.STRONG:
        return lambda_max(expected_second_moment(g, cfg, mu, gauge_form=True) - J)
    if bal.negative_empty:
        return lambda_max(expected_second_moment(g, cfg, mu) - J)
    return lambda_max(expected_second_moment(g, cfg, mu))


# -- rates ----------------------------------------------------------------------------


def _rho(M: np.ndarray) -> float:
    if np.array_equal(M, M.T):
        w = eigenvalues_sym(M)
        return float(max(abs(w[0]), abs(w[-1])))
    return spectral_radius(M)


def convergence_rate(g: SignedGraph, cfg: DynamicsConfig) -> float:
    """Asymptotic per-step contraction factor of the deterministic dynamics."""
    U = update_matrix(g, cfg)
    n = g.n
    J = np.full((n, n), 1.0 / n)
    if cfg.rule is Rule.OPPOSING:
        bal = check_structural_balance(g)
        if bal.verdict is Verdict.STRONG:
            K = np.array(bal.gauge, dtype=float)
            rate = _rho(K[:, None] * U * K[None, :] - J)
        elif bal.negative_empty:
            rate = _rho(U - J)
        else:
            rate = _rho(U)
    else:
        if not g.directed and g.negative_edges:
            b_star = critical_beta_deterministic(g, cfg.alpha)
            if not cfg.beta < b_star:
                raise NotInConvergenceRegime(f"beta={cfg.beta} is not below beta*={b_star:.9g}")
        rate = _rho(U - J)
    if not rate < 1.0:
        raise NotInConvergenceRegime(f"spectral rate {rate:.9g} is not below 1")
    return rate


# -- report ---------------------------------------------------------------------------


@dataclass
class SpectralReport:
    rule: str
    alpha: float
    beta: float
    eigenvalues: list[float] | None = None
    spectral_radius: float | None = None
    critical_beta: float | None = None
    critical_beta_is_upper_bound: bool = False
    critical_beta_gossip: float | None = None
    convergence_rate: float | None = None
    eventually_positive: bool | None = None
    eventual_positivity_k0: int | None = None
    left_vector: list[float] | None = None
    notes: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "rule": self.rule,
            "alpha": self.alpha,
            "beta": self.beta,
            "eigenvalues": self.eigenvalues,
            "spectral_radius": self.spectral_radius,
            "critical_beta": self.critical_beta,
            "critical_beta_is_upper_bound": self.critical_beta_is_upper_bound,
            "critical_beta_gossip": self.critical_beta_gossip,
            "convergence_rate": self.convergence_rate,
            "eventually_positive": self.eventually_positive,
            "eventual_positivity_k0": self.eventual_positivity_k0,
            "left_vector": self.left_vector,
            "notes": list(self.notes),
        }


def spectral_report(g: SignedGraph, cfg: DynamicsConfig) -> SpectralReport:
    from .errors import SignetError

    rep = SpectralReport(cfg.rule.value, cfg.alpha, cfg.beta)
    U = update_matrix(g, cfg)
    if not g.directed:
        w = eigenvalues_sym(U)
        rep.eigenvalues = [float(v) for v in w]
        rep.spectral_radius = float(max(abs(w[0]), abs(w[-1])))
    else:
        rep.spectral_radius = spectral_radius(U)

    try:
        if g.directed:
            rep.critical_beta = critical_beta_directed_bound(g, cfg.alpha)
            rep.critical_beta_is_upper_bound = True
        else:
            rep.critical_beta = critical_beta_deterministic(g, cfg.alpha)
            rep.critical_beta_gossip = critical_beta_gossip(g, cfg.alpha)
    except SignetError as exc:
        rep.notes.append(f"critical beta unavailable: {exc}")

    try:
        rep.convergence_rate = convergence_rate(g, cfg)
    except SignetError as exc:
        rep.notes.append(f"convergence rate unavailable: {exc}")

    target = U
    if cfg.rule is Rule.OPPOSING:
        try:
            bal = check_structural_balance(g)
        except SignetError as exc:
            bal = None
            rep.notes.append(f"balance unavailable: {exc}")
        if bal is not None and bal.verdict is Verdict.STRONG:
            K = np.array(bal.gauge, dtype=float)
            target = K[:, None] * U * K[None, :]
    ep = is_eventually_positive(target)
    rep.eventually_positive = ep.verdict
    rep.eventual_positivity_k0 = ep.k0
    if ep.reason:
        rep.notes.append(f"eventual positivity: {ep.reason}")
    try:
        rep.left_vector = [float(v) for v in stationary_left_vector(target)]
    except SignetError as exc:
        rep.notes.append(f"left vector unavailable: {exc}")
    return rep

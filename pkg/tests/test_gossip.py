import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from signet import generators as gen
from signet.errors import (
    DirectedGraphUnsupported,
    GaugeRequestedOnUnbalancedGraph,
    MonitorsMissing,
    ParameterRangeViolation,
    ProbabilityNotNormalized,
)
from signet.deterministic import Trajectory
from signet.graph import Edge, build_graph
from signet.gossip import (
    GossipProcess,
    MonitorConfig,
    OutcomeClass,
    OutcomeContext,
    UniformBox,
    classify_outcome,
    default_context,
    default_large_beta,
    empirical_second_moment,
    gossip_step,
    initial_state,
    lemma1_constant,
    lemma1_monitor,
    make_rng,
    monitors_from_states,
    monte_carlo,
    no_survivor_holds,
    parse_x0_spec,
    predict_gossip_limit,
    run_seed,
    run_trajectory,
    run_trajectory_reference,
    sample_pair,
    selection_probabilities,
)
from signet.laplacian import DynamicsConfig, Rule, expected_second_moment, probabilistic_laplacians

X0 = [1.0, 0.0, 0.5]


# -- selection -----------------------------------------------------------------------------


def test_selection_examples(t2):
    path = build_graph(3, False, [(1, 2, 1), (2, 3, -1)])
    np.testing.assert_allclose(selection_probabilities(path), [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(selection_probabilities(t2), 1 / 3, atol=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_selection_probabilities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    g = gen.random_signed_graph(int(rng.integers(2, 12)), rng)
    mu = selection_probabilities(g)
    assert mu.min() > 0 and abs(math.fsum(mu) - 1) < 1e-14


def test_process_validation(t2, d3):
    with pytest.raises(DirectedGraphUnsupported):
        GossipProcess(d3)
    with pytest.raises(ProbabilityNotNormalized):
        GossipProcess(t2, mu=np.array([0.5, 0.5, 0.1]))
    with pytest.raises(ProbabilityNotNormalized):
        GossipProcess(t2, mu=np.array([0.5, 0.5]))


def test_empirical_frequencies():
    p = GossipProcess(build_graph(4, False, [(1, 2, 1), (2, 3, -1), (3, 4, 1), (1, 3, 1)]), seed=99)
    N = 1_000_000
    counts = np.bincount(p.draw_indices(N), minlength=4)
    mu = p.mu
    assert np.all(np.abs(counts / N - mu) <= 3 * np.sqrt(mu * (1 - mu) / N))


def test_sequential_draws_match_block_draws():
    a = GossipProcess(gen.square_with_diagonals(), seed=7)
    b = GossipProcess(gen.square_with_diagonals(), seed=7)
    block = a.draw_indices(500)
    seq = [b.graph.edges.index(sample_pair(b)) for _ in range(500)]
    np.testing.assert_array_equal(block, seq)


def test_rng_test_vectors():
    # Philox-4x64 keyed by the seed; frozen so a numpy change cannot slip by
    r = make_rng(0)
    assert r.random(3).tolist() == [0.011546754286331562, 0.24154919656271812, 0.11142585551493822]
    assert make_rng(0).bit_generator.random_raw(2).tolist() == [213000021201967259, 4455796210202625458]
    assert make_rng(2**64 - 1).random(2).tolist() == [0.23494158814525556, 0.7173107484541781]
    assert run_seed(2**64 - 1, 1) == 0


# -- single steps --------------------------------------------------------------------------


def test_step_examples():
    pos = Edge(1, 2, 1, 1.0)
    neg = Edge(1, 2, -1, 1.0)
    np.testing.assert_allclose(gossip_step([1.0, 0.0], pos, DynamicsConfig("opposing", 0.2, 0.2)), [0.8, 0.2],
                               atol=1e-15)
    np.testing.assert_allclose(gossip_step([1.0, 0.5], neg, DynamicsConfig("opposing", 0.2, 0.2)), [0.7, 0.2],
                               atol=1e-15)
    cfg = DynamicsConfig("repelling", 0.2, 3.0, bound_A=1.0)
    np.testing.assert_allclose(gossip_step([0.5, 0.4], neg, cfg), [0.8, 0.1], atol=1e-15)
    np.testing.assert_array_equal(gossip_step([0.9, 0.1], neg, cfg), [1.0, -1.0])


@given(st.integers(0, 2**32 - 1))
def test_step_touches_only_endpoints(seed):
    rng = np.random.default_rng(seed)
    g = gen.random_signed_graph(int(rng.integers(3, 9)), rng)
    x = rng.normal(size=g.n)
    e = g.edges[int(rng.integers(len(g.edges)))]
    cfg = DynamicsConfig("opposing" if rng.integers(2) else "repelling", 0.3, float(rng.uniform(0, 4)),
                         bound_A=None if rng.integers(2) else 1.0)
    y = gossip_step(x, e, cfg)
    others = [k for k in range(g.n) if k not in (e.u - 1, e.v - 1)]
    assert np.array_equal(y[others], x[others])


def test_zero_state_stays_zero(t1):
    for rule in ("opposing", "repelling"):
        traj = run_trajectory(GossipProcess(t1, seed=3), DynamicsConfig(rule, 0.3, 5.0), np.zeros(3), 1000)
        assert not traj.states.any()


def test_clustered_states_absorbing():
    g = gen.complete_from_groups([{1, 2}, {3, 4}])
    alpha = 0.3
    cfg = DynamicsConfig("repelling", alpha, default_large_beta(alpha), bound_A=2.0)
    x = np.array([-2.0, -2.0, 2.0, 2.0])
    for e in g.edges:
        np.testing.assert_array_equal(gossip_step(x, e, cfg), x)
    cfg = DynamicsConfig("opposing", alpha, default_large_beta(alpha), bound_A=2.0)
    for e in g.edges:
        np.testing.assert_array_equal(gossip_step(x, e, cfg), x)
    weak = gen.complete_from_groups([{1}, {2}, {3, 4}])
    y = np.array([-2.0, 2.0, -2.0, -2.0])
    for e in weak.edges:
        np.testing.assert_array_equal(gossip_step(y, e, DynamicsConfig("repelling", alpha, 10.0, bound_A=2.0)), y)


def test_default_large_beta():
    assert default_large_beta(0.3) == pytest.approx(1 / 0.3)
    assert default_large_beta(0.75) == pytest.approx(4.0)
    assert default_large_beta(0.5) == 3.0
    assert default_large_beta(0.9) == 3.0


# -- trajectories --------------------------------------------------------------------------


def test_determinism(t2):
    cfg = DynamicsConfig("opposing", 0.2, 0.2)
    a = run_trajectory(GossipProcess(t2, seed=11), cfg, X0, 5000)
    b = run_trajectory(GossipProcess(t2, seed=11), cfg, X0, 5000)
    np.testing.assert_array_equal(a.states, b.states)
    c = run_trajectory(GossipProcess(t2, seed=12), cfg, X0, 5000)
    assert not np.array_equal(a.states, c.states)


@given(st.integers(0, 2**32 - 1))
def test_kernel_matches_reference(seed):
    rng = np.random.default_rng(seed)
    g = gen.random_signed_graph(int(rng.integers(2, 7)), rng)
    rule = "opposing" if rng.integers(2) else "repelling"
    bound = None if rng.integers(2) else 1.0
    cfg = DynamicsConfig(rule, float(rng.uniform(0.05, 0.95)), float(rng.uniform(0, 3)), bound_A=bound)
    x0 = rng.uniform(-1, 1, g.n)
    a = run_trajectory(GossipProcess(g, seed=seed), cfg, x0, 300)
    b = run_trajectory_reference(GossipProcess(g, seed=seed), cfg, x0, a.monitors.steps_done)
    np.testing.assert_array_equal(a.states, b.states)


def test_kernel_matches_reference_across_blocks(t2):
    cfg = DynamicsConfig("opposing", 0.2, 0.2)
    horizon = 70_000
    a = run_trajectory(GossipProcess(t2, seed=5), cfg, X0, horizon)
    b = run_trajectory_reference(GossipProcess(t2, seed=5), cfg, X0, horizon)
    np.testing.assert_array_equal(a.final, b.final)
    np.testing.assert_array_equal(a.states[::997], b.states[::997])


def test_t2_gossip_limit(t2):
    traj = run_trajectory(GossipProcess(t2, seed=0), DynamicsConfig("opposing", 0.2, 0.2), X0, 10_000)
    assert np.abs(traj.final - np.array([1, 1, -1]) / 6).max() < 1e-3


@given(st.integers(0, 2**32 - 1))
def test_projection_safety(seed):
    rng = np.random.default_rng(seed)
    g = gen.random_signed_graph(int(rng.integers(2, 8)), rng)
    A = float(rng.uniform(0.5, 3))
    cfg = DynamicsConfig("opposing" if rng.integers(2) else "repelling", float(rng.uniform(0.05, 0.95)),
                         float(rng.uniform(0, 20)), bound_A=A)
    traj = run_trajectory(GossipProcess(g, seed=seed), cfg, rng.uniform(-A, A, g.n), 2000)
    assert np.abs(traj.states).max() <= A
    assert traj.monitors.h_max <= A


def test_recording_stride(t2):
    traj = run_trajectory(GossipProcess(t2), DynamicsConfig("opposing", 0.2, 0.2), X0, 250_001)
    assert traj.times[0] == 0 and traj.times[-1] == 250_001
    assert np.all(np.diff(traj.times) > 0)
    traj = run_trajectory(GossipProcess(t2), DynamicsConfig("opposing", 0.2, 0.2), X0, 100,
                          MonitorConfig(record_every=10))
    assert traj.times.tolist() == list(range(0, 101, 10))


def test_escape_stops_run(t2):
    traj = run_trajectory(GossipProcess(t2, seed=1), DynamicsConfig("opposing", 0.3, 50.0), X0, 1_000_000)
    assert traj.status == "diverged"
    assert traj.monitors.steps_done < 1_000_000


@given(st.integers(0, 2**32 - 1))
def test_kernel_monitors_match_recomputation(seed):
    rng = np.random.default_rng(seed)
    g = gen.random_signed_graph(int(rng.integers(2, 6)), rng)
    bound = None if rng.integers(2) else 1.0
    rule = "opposing" if rng.integers(2) else "repelling"
    cfg = DynamicsConfig(rule, float(rng.uniform(0.05, 0.95)), float(rng.uniform(0, 5)), bound_A=bound)
    x0 = rng.uniform(-1, 1, g.n)
    traj = run_trajectory(GossipProcess(g, seed=seed), cfg, x0, 400)
    ref = monitors_from_states(traj.states, bound)
    m = traj.monitors
    assert m.h_max == ref.h_max and m.spread_max == ref.spread_max
    np.testing.assert_array_equal(m.node_max_abs, ref.node_max_abs)
    np.testing.assert_array_equal(m.pair_max_gap, ref.pair_max_gap)
    np.testing.assert_array_equal(m.run_min, ref.run_min)
    np.testing.assert_array_equal(m.run_max, ref.run_max)
    np.testing.assert_array_equal(m.touches_low, ref.touches_low)
    np.testing.assert_array_equal(m.touches_high, ref.touches_high)
    np.testing.assert_array_equal(m.labels, ref.labels)
    assert m.last_unsettled_t == ref.last_unsettled_t


# -- outcome classes ---------------------------------------------------------------------------


def _traj(rows, bound=None, mcfg=None):
    rows = np.array(rows, dtype=float)
    t = Trajectory(np.arange(len(rows)), rows)
    t.monitors = monitors_from_states(rows, bound, mcfg=mcfg)
    return t


def test_classify_constant_bipartite(t2):
    limit = np.array([1, 1, -1]) / 6
    traj = _traj([limit] * 10)
    ctx = default_context(t2, DynamicsConfig("opposing", 0.2, 0.2), limit)
    assert classify_outcome(traj, ctx).cls is OutcomeClass.BIPARTITE
    assert classify_outcome(_traj([np.zeros(3)] * 5), OutcomeContext(limit=(0, 0, 0))).cls is OutcomeClass.ZERO
    assert classify_outcome(_traj([np.ones(3)] * 5), OutcomeContext(limit=(1, 1, 1))).cls is OutcomeClass.AVERAGE
    assert classify_outcome(_traj([np.ones(3)] * 5)).cls is OutcomeClass.UNDECIDED
    assert classify_outcome(_traj([[1.0, 1.0, 1.1]] * 5), OutcomeContext(limit=(1, 1, 1))).cls is OutcomeClass.UNDECIDED


def test_classify_clustering():
    A = 1.0
    rows = [[0.1, -0.2, 0.3, 0.0]] * 2 + [[-A, -A, A, A]] * 8
    traj = _traj(rows, A)
    out = classify_outcome(traj, OutcomeContext(partition=((1, 2), (3, 4)), opposite_labels=True))
    assert out.cls is OutcomeClass.CLUSTERING and out.group_labels == (-A, A)
    # groups on the same side violate the two-group condition
    same = _traj([[0.0] * 4] + [[A] * 4] * 9, A)
    ctx = OutcomeContext(partition=((1, 2), (3, 4)), opposite_labels=True)
    assert classify_outcome(same, ctx).cls is not OutcomeClass.CLUSTERING
    ctx = OutcomeContext(partition=((1, 2), (3, 4)), opposite_labels=False)
    assert classify_outcome(same, ctx).cls is OutcomeClass.CLUSTERING


def test_clustering_requires_settling():
    A = 1.0
    rows = [[0.0] * 4] * 9 + [[-A, -A, A, A]]
    traj = _traj(rows, A)
    out = classify_outcome(traj, OutcomeContext(partition=((1, 2), (3, 4)), opposite_labels=True))
    assert out.cls is OutcomeClass.UNDECIDED


def test_classify_oscillating():
    A = 1.0
    up, down = [A, A, A], [-A, -A, -A]
    rows = [[0, 0, 0], up, down, [0, 0, 0], up, down, [0, 0, 0]]
    assert classify_outcome(_traj(rows, A)).cls is OutcomeClass.OSCILLATING
    rows = [[0, 0, 0], up, down, [0, 0, 0]]
    assert classify_outcome(_traj(rows, A)).cls is OutcomeClass.UNDECIDED


def test_classify_diverging():
    assert classify_outcome(_traj([[0, 0, 0], [2e6, 0, 0]])).cls is OutcomeClass.DIVERGING


def test_monitors_missing():
    with pytest.raises(MonitorsMissing):
        classify_outcome(Trajectory(np.arange(2), np.zeros((2, 3))))


def test_no_survivor_predicate():
    m = monitors_from_states([[0, 0, 0], [2e3, -2e3, 5e3]])
    assert no_survivor_holds(m, Rule.OPPOSING)
    assert no_survivor_holds(m, Rule.REPELLING)
    m = monitors_from_states([[0, 0, 0], [2e3, 2e3, 2e3]])
    assert no_survivor_holds(m, Rule.OPPOSING) and not no_survivor_holds(m, Rule.REPELLING)


# -- lower-bound monitor -----------------------------------------------------------------------


def test_lemma1_constants():
    assert lemma1_constant(0.3) == pytest.approx(0.4)
    assert lemma1_constant(0.9) == 0.5
    traj = Trajectory(np.arange(2), np.ones((2, 3)))
    for cfg in (DynamicsConfig("opposing", 0.5, 3.0), DynamicsConfig("opposing", 0.3, 2.9),
                DynamicsConfig("repelling", 0.3, 3.0)):
        with pytest.raises(ParameterRangeViolation):
            lemma1_monitor(traj, cfg)


def test_lemma1_sure_event(t2):
    cfg = DynamicsConfig("opposing", 0.3, 3.0)
    traj = run_trajectory(GossipProcess(t2, seed=4), cfg, X0, 100_000)
    assert traj.monitors.lemma1_violations == 0
    assert lemma1_monitor(traj, cfg) == 0
    # the monitor does count genuine drops
    fake = Trajectory(np.arange(3), [[1.0, 0, 0], [0.3, 0, 0], [0.3, 0, 0]])
    assert lemma1_monitor(fake, cfg) == 1


# -- second moments ----------------------------------------------------------------------------


def test_empirical_second_moment(t2, t1):
    cfg = DynamicsConfig("opposing", 0.2, 0.2)
    p = GossipProcess(t2, seed=8)
    mean, se = empirical_second_moment(p, cfg, 100_000, gauge_form=True)
    analytic = expected_second_moment(t2, cfg, p.mu, gauge_form=True)
    assert np.abs(mean - analytic).max() < 0.01
    assert np.all(np.abs(mean - analytic) <= 5 * se + 1e-12)
    cfg0 = DynamicsConfig("opposing", 0.2, 0.0)
    mean0, _ = empirical_second_moment(GossipProcess(t2, seed=9), cfg0, 100_000)
    Lp, _, _ = probabilistic_laplacians(t2, p.mu)
    assert np.abs(mean0 - (np.eye(3) - 2 * 0.2 * 0.8 * Lp)).max() < 0.01
    with pytest.raises(GaugeRequestedOnUnbalancedGraph):
        empirical_second_moment(GossipProcess(t1), cfg, 10_000, gauge_form=True)
    with pytest.raises(ValueError):
        empirical_second_moment(p, cfg, 100)


def test_predict_gossip_limit(t1, t2):
    p = predict_gossip_limit(t2, DynamicsConfig("opposing", 0.2, 0.2), X0)
    np.testing.assert_allclose(p.limit, np.array([1, 1, -1]) / 6)
    p = predict_gossip_limit(t1, DynamicsConfig("repelling", 0.5, 0.1), [3.0, 0.0, 0.0])
    np.testing.assert_allclose(p.limit, 1.0)
    assert predict_gossip_limit(t1, DynamicsConfig("repelling", 0.5, 0.2), X0).kind.value == "Unknown"
    assert predict_gossip_limit(t1, DynamicsConfig("opposing", 0.2, 0.2), X0).kind.value == "ZeroConsensus"
    assert predict_gossip_limit(t2, DynamicsConfig("opposing", 0.2, 5.0), X0).kind.value == "Unknown"


# -- Monte Carlo -----------------------------------------------------------------------------


def test_x0_specs():
    box = parse_x0_spec("uniform:-1:1:42")
    assert isinstance(box, UniformBox) and str(box) == "uniform:-1.0:1.0:42"
    a, b = initial_state(box, 4, 3), initial_state(box, 4, 3)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, initial_state(box, 4, 4))
    assert np.all((-1 <= a) & (a < 1))
    np.testing.assert_array_equal(parse_x0_spec("1, 0 0.5", 3), X0)
    for bad in ("uniform:1:0:3", "uniform:0:1", "1,2"):
        with pytest.raises(ValueError):
            parse_x0_spec(bad, 3)


def test_monte_carlo_bipartite(t2):
    s = monte_carlo(GossipProcess(t2, seed=0), DynamicsConfig("opposing", 0.2, 0.2), X0, 50, 10_000)
    assert s.verdict_counts["BipartiteConsensus"] == 50
    assert sum(s.verdict_counts.values()) == s.runs
    assert s.mse[-1] < s.mse[0]


def test_monte_carlo_summary_json(t2):
    s = monte_carlo(GossipProcess(t2, seed=0), DynamicsConfig("opposing", 0.2, 0.2),
                    parse_x0_spec("uniform:-1:1:3"), 4, 200_000)
    d = json.loads(s.to_json())
    for key in ("rng", "runs", "horizon", "seed", "verdict_counts", "terminal_states", "mse_curve",
                "touch_counts", "lemma1_violations", "no_survivor"):
        assert key in d
    assert len(d["mse_curve"]["t"]) <= 1000
    assert len(d["terminal_states"]) == 4
    assert s.to_json() == monte_carlo(GossipProcess(t2, seed=0), DynamicsConfig("opposing", 0.2, 0.2),
                                      parse_x0_spec("uniform:-1:1:3"), 4, 200_000).to_json()


def test_monte_carlo_diverging_runs_have_no_survivors(t2):
    s = monte_carlo(GossipProcess(t2, seed=1), DynamicsConfig("opposing", 0.3, 5.0), X0, 40, 100_000)
    assert s.verdict_counts["Diverging"] > 20
    assert s.no_survivor_runs >= 0.99 * s.diverging_runs
    assert s.lemma1_violations == 0


def test_mean_square_ratio_bound():
    """E V(t+1) / E V(t) stays below the top eigenvalue of E[W^2] - J (plus slack)."""
    g = gen.complete_from_groups([{1, 2, 3}, {4, 5, 6}])
    cfg = DynamicsConfig("opposing", 0.2, 0.2)
    p = GossipProcess(g, seed=21)
    P = expected_second_moment(g, cfg, p.mu, gauge_form=True)
    lam = np.linalg.eigvalsh(P - np.full((6, 6), 1 / 6)).max()
    s = monte_carlo(p, cfg, parse_x0_spec("uniform:-1:1:5"), 10_000, 60, mse_stride=1)
    V = s.mse
    keep = V[:-1] > 1e-6
    ratio = V[1:][keep] / V[:-1][keep]
    assert keep.sum() > 50
    assert np.all(ratio <= lam + 0.02)


def test_projection_regime_warnings():
    k4 = gen.complete_from_groups([{1, 2}, {3, 4}])
    spec = parse_x0_spec("uniform:-1:1:0")
    with pytest.warns(UserWarning, match="clustering"):
        monte_carlo(GossipProcess(k4), DynamicsConfig("repelling", 0.7, 10.0, bound_A=1.0), spec, 1, 100)
    with pytest.warns(UserWarning, match="oscillation"):
        monte_carlo(GossipProcess(gen.triangle_t1()), DynamicsConfig("repelling", 0.3, 10.0, bound_A=1.0), spec, 1, 100)


def test_x0_stream_is_separate_from_pair_stream():
    box = UniformBox(0.0, 1.0, 5)
    x = box.draw(4, 0)
    assert not np.array_equal(x, make_rng(5).random(4))
    np.testing.assert_array_equal(x, make_rng(5, stream=1).random(4))

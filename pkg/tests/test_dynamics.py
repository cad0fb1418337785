import io
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from flowcomm import (
    Graph,
    InstabilityError,
    Laplacian,
    OpinionState,
    Regime,
    Replicator,
    SimulationConfig,
    alpha_regime,
    exact_evolution,
    init_opinions,
    largest_adjacency_eigenpair,
    simulate,
    steady_state,
    step_euler,
    synthetic,
)
from flowcomm.dynamics import prepare_flow, run_rng

from conftest import dense_from_graph


def test_init_opinions_deterministic_and_bounded():
    a = init_opinions(3, run_rng(42, 0))
    b = init_opinions(3, run_rng(42, 0))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, init_opinions(3, run_rng(42, 1)))
    big = init_opinions(100_000, run_rng(9, 0))
    assert np.all(big >= -math.pi) and np.all(big <= math.pi)
    sigma = math.pi / math.sqrt(3 * big.size)
    assert abs(big.mean()) < 5 * sigma


def test_run_keys_do_not_collide():
    assert not np.array_equal(init_opinions(5, run_rng(0, 1)), init_opinions(5, run_rng(1, 0)))


def test_euler_single_edge(single_edge):
    s = step_euler(Laplacian(), single_edge, OpinionState(np.array([1.0, 0.0])), 0.1)
    assert np.allclose(s.theta, [0.9, 0.1], atol=1e-15)
    assert s.time == pytest.approx(0.1)


def test_euler_constant_fixed(star):
    s = step_euler(Laplacian(), star, OpinionState(np.full(4, 0.7)), 0.2)
    assert np.array_equal(s.theta, np.full(4, 0.7))


def test_euler_perron_fixed(star):
    p = largest_adjacency_eigenpair(star)
    s = step_euler(Replicator(p.lambda_max), star, OpinionState(p.vector), 0.1)
    assert np.allclose(s.theta, p.vector, atol=1e-12)


def test_euler_dimension_and_instability(triangle):
    with pytest.raises(ValueError):
        step_euler(Laplacian(), triangle, OpinionState(np.ones(2)), 0.1)
    with pytest.raises(FloatingPointError):
        step_euler(Laplacian(), triangle, OpinionState(np.array([1e308, -1e308, 0.0])), 10.0)


def test_simulate_reproducible(triangle):
    cfg = SimulationConfig(num_runs=2, num_steps=20, seed=5, snapshot_times=(0, 10, 20))
    a = simulate(cfg, triangle)
    b = simulate(cfg, triangle)
    assert np.array_equal(a.theta, b.theta)
    assert np.array_equal(a.steady, b.steady)


def test_simulate_snapshot_zero_is_theta0(star):
    cfg = SimulationConfig(num_runs=1, num_steps=5, seed=3, snapshot_times=(0, 5))
    b = simulate(cfg, star)
    assert np.array_equal(b.snapshot(0)[0], init_opinions(4, run_rng(3, 0)))
    with pytest.raises(KeyError):
        b.snapshot(3)


def test_simulate_given_theta0(single_edge):
    cfg = SimulationConfig(num_runs=1, num_steps=3, step_size=0.1)
    theta0 = np.array([[1.0, 0.0]])
    b = simulate(cfg, single_edge, theta0=theta0)
    assert np.allclose(b.snapshot(3)[0], [0.5 + 0.5 * 0.8**3, 0.5 - 0.5 * 0.8**3])
    assert np.allclose(b.steady[0], [0.5, 0.5])
    assert theta0.tolist() == [[1.0, 0.0]]  # caller's array untouched


def test_simulate_conservative_approaches_mean():
    g = synthetic.random_connected(20, 0.3, np.random.default_rng(2))
    cfg = SimulationConfig(num_runs=3, num_steps=3000, seed=1)
    b = simulate(cfg, g)
    final = b.snapshot(3000)
    assert np.allclose(final, b.theta0.mean(axis=1, keepdims=True), atol=1e-8)
    assert np.allclose(b.steady, final, atol=1e-8)


def test_simulate_rejects_unstable_step(triangle):
    # lambda_max(L_K3) = 3, bound 2/3
    with pytest.raises(ValueError, match="stability"):
        simulate(SimulationConfig(num_runs=1, step_size=0.7), triangle)


def test_instability_reports_run_and_step(triangle):
    theta0 = np.array([[0.0, 0.0, 0.0], [1e308, -1e308, 1e308]])
    cfg = SimulationConfig(num_runs=2, num_steps=3, step_size=0.6)
    with pytest.raises(InstabilityError) as info:
        simulate(cfg, triangle, theta0=theta0)
    assert info.value.run == 1 and info.value.step == 1


def test_worker_count_does_not_change_results():
    g = synthetic.random_connected(200, 0.05, np.random.default_rng(4))
    base = dict(num_runs=4, num_steps=50, seed=11, model="nonconservative")
    a = simulate(SimulationConfig(workers=1, **base), g)
    b = simulate(SimulationConfig(workers=3, **base), g)
    assert np.array_equal(a.theta, b.theta)


def test_batched_runs_equal_single_runs():
    g = synthetic.random_connected(30, 0.2, np.random.default_rng(8))
    cfg = SimulationConfig(num_runs=3, num_steps=40, seed=2)
    batch = simulate(cfg, g)
    for y in range(3):
        single = simulate(SimulationConfig(num_runs=1, num_steps=40, seed=2), g,
                          theta0=batch.theta0[y:y + 1])
        assert np.array_equal(single.theta[:, 0], batch.theta[:, y])


def test_config_validation():
    with pytest.raises(ValueError):
        SimulationConfig(model="other")
    with pytest.raises(ValueError):
        SimulationConfig(num_runs=0)
    with pytest.raises(ValueError):
        SimulationConfig(num_steps=5, snapshot_times=(6,))
    assert SimulationConfig(num_steps=7).snapshot_times == (7,)


def test_steady_conservative_single_edge(single_edge):
    s = steady_state(Laplacian(), single_edge, np.array([0.0, math.pi]))
    assert s.kind == "consensus"
    assert np.allclose(s.theta_s, [math.pi / 2, math.pi / 2])


def test_steady_nonconservative_star_ratio(star):
    p = largest_adjacency_eigenpair(star)
    s = steady_state(Replicator(p.lambda_max), star, np.array([0.3, -1.0, 2.0, 0.5]))
    assert s.kind == "centrality"
    assert s.theta_s[0] / s.theta_s[1] == pytest.approx(math.sqrt(3), abs=1e-9)
    assert np.allclose(s.theta_s[1:], s.theta_s[1])


def test_steady_orthogonal_start_is_zero(star):
    p = largest_adjacency_eigenpair(star)
    x = np.array([0.0, 1.0, -1.0, 0.0])
    assert abs(p.vector @ x) < 1e-15
    s = steady_state(Replicator(p.lambda_max), star, x)
    assert np.allclose(s.theta_s, 0.0)


def test_steady_requires_lambda_max(triangle):
    with pytest.raises(ValueError, match="steady state"):
        steady_state(Replicator(2.5), triangle, np.ones(3))
    with pytest.raises(ValueError):
        steady_state(Replicator(1.5), triangle, np.ones(3), allow_trivial=True)
    s = steady_state(Replicator(2.5), triangle, np.ones(3), allow_trivial=True)
    assert np.all(s.theta_s == 0)


def test_steady_per_component():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 0), (3, 4)], node_ids=range(5))
    theta0 = np.array([1.0, 2.0, 3.0, -1.0, 5.0])
    s = steady_state(Laplacian(), g, theta0)
    assert np.allclose(s.theta_s, [2, 2, 2, 2, 2])
    flow = prepare_flow(g, "nonconservative")
    s = steady_state(flow.operator, g, theta0)
    # triangle: constant Perron vector; edge: constant as well
    assert np.allclose(s.theta_s, [2, 2, 2, 2, 2])


def test_global_alpha_sends_small_component_to_zero():
    g = Graph.from_edges([(0, 1), (1, 2), (2, 0), (3, 4)], node_ids=range(5))
    cfg = SimulationConfig(model="nonconservative", alpha_mode="global", num_runs=2, num_steps=10)
    b = simulate(cfg, g)
    assert np.all(b.steady[:, 3:] == 0)
    assert np.all(b.steady[:, :3] != 0)


def test_exact_evolution_t0_and_limit(triangle):
    x = np.array([1.0, 0.0, 0.0])
    assert np.allclose(exact_evolution(Laplacian(), triangle, x, 0.0), x, atol=1e-15)
    assert np.allclose(exact_evolution(Laplacian(), triangle, x, 50.0), [1 / 3] * 3)


def test_exact_evolution_matches_expm():
    rng = np.random.default_rng(5)
    g = synthetic.random_connected(25, 0.2, rng)
    w = dense_from_graph(g)
    x = rng.uniform(-math.pi, math.pi, 25)
    lap = np.diag(w.sum(1)) - w
    p = largest_adjacency_eigenpair(g)
    rep = p.lambda_max * np.eye(25) - w
    for kind, mat in [(Laplacian(), lap), (Replicator(p.lambda_max), rep)]:
        for t in (0.1, 1.0, 3.0):
            assert np.allclose(exact_evolution(kind, g, x, t), scipy.linalg.expm(-mat * t) @ x,
                               atol=1e-10)


def test_exact_evolution_size_limit():
    g = synthetic.random_connected(20, 0.2, np.random.default_rng(0))
    with pytest.raises(ValueError):
        exact_evolution(Laplacian(), g, np.zeros(20), 1.0, dense_threshold=10)


def test_euler_converges_to_exact_on_triangle(triangle):
    x = np.array([1.0, -0.5, 2.0])
    h_nominal = 1e-3 * 2 / 3.0
    steps = math.ceil(1.0 / h_nominal)
    cfg = SimulationConfig(num_runs=1, num_steps=steps, step_size=1.0 / steps)
    b = simulate(cfg, triangle, theta0=x[None])
    exact = exact_evolution(Laplacian(), triangle, x, 1.0)
    rel = np.linalg.norm(b.snapshot(steps)[0] - exact) / np.linalg.norm(exact)
    assert rel < 1e-3


@pytest.mark.parametrize("alpha, regime", [
    (2.1, Regime.DECAYING),
    (2.0, Regime.STEADY),
    (1.9, Regime.DIVERGING),
])
def test_alpha_regime_triangle(triangle, alpha, regime):
    assert alpha_regime(triangle, alpha, np.array([0.3, 1.0, -0.2])) is regime


def test_alpha_regime_orthogonal_start(triangle):
    with pytest.raises(ValueError):
        alpha_regime(triangle, 2.0, np.array([1.0, -1.0, 0.0]))


def test_trajectory_csv(single_edge):
    cfg = SimulationConfig(num_runs=2, num_steps=1, snapshot_times=(0, 1))
    b = simulate(cfg, single_edge)
    buf = io.StringIO()
    b.write_snapshots_csv(single_edge, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "run,step,node_id,theta"
    assert len(lines) == 1 + 2 * 2 * 2
    buf = io.StringIO()
    b.write_steady_csv(single_edge, buf)
    assert buf.getvalue().splitlines()[0] == "run,node_id,theta_s"


graphs = st.builds(
    lambda n, p, seed: synthetic.random_connected(n, p, np.random.default_rng(seed)),
    st.integers(2, 30), st.floats(0.05, 0.6), st.integers(0, 2**32 - 1),
)


@given(graphs, st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_conservation_and_contraction(g, seed):
    flow = prepare_flow(g, "conservative")
    h = flow.default_step(g)
    x = init_opinions(g.num_nodes, np.random.default_rng(seed))
    total0 = x.sum()
    scale = np.abs(x).sum()
    mean = x.mean()
    prev = np.max(np.abs(x - mean))
    s = OpinionState(x)
    for _ in range(200):
        s = step_euler(flow.operator, g, s, h)
        assert abs(s.theta.sum() - total0) <= 1e-9 * scale
        dev = np.max(np.abs(s.theta - mean))
        assert dev <= prev + 1e-12
        prev = dev


@given(graphs, st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_direction_converges_to_perron(g, seed):
    flow = prepare_flow(g, "nonconservative")
    v = flow.perron[0].vector
    h = flow.default_step(g)
    x = init_opinions(g.num_nodes, np.random.default_rng(seed))
    if abs(v @ x) < 1e-3:
        return

    def angle(y):
        along = v @ y
        return math.atan2(np.linalg.norm(y - along * v), abs(along))

    s = OpinionState(x)
    prev = angle(x)
    for _ in range(100):
        s = step_euler(flow.operator, g, s, h)
        a = angle(s.theta)
        assert a <= prev + 1e-9
        prev = a

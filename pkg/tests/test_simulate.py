import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memconsensus.errors import ConnectivityError, ConvergenceFloor, DomainError, ParameterError
from memconsensus.gains import formation_gains, gains_m1, r1_star
from memconsensus.graphs import Graph, generate_graph, laplacian_spectrum, parse_graph_spec
from memconsensus.modes import ControlParams, char_poly, convergence_rate, mode_radii
from memconsensus.simulate import (
    FormationPlan,
    SimConfig,
    estimate_rate,
    formation_gap,
    simulate_consensus,
    simulate_formation,
    simulate_modes,
)

from oracles import naive_node_simulation

TAU = 0.1
P8 = generate_graph("path", 8)
C8 = generate_graph("cycle", 8)
S_P8 = laplacian_spectrum(P8)
S_C8 = laplacian_spectrum(C8)
OPT_P8 = gains_m1(S_P8.lambda2, S_P8.lambdaN, TAU).params
OPT_C8 = gains_m1(S_C8.lambda2, S_C8.lambdaN, TAU).params


def stable_random_params(rng, s, M):
    base = gains_m1(s.lambda2, s.lambdaN, TAU).params
    while True:
        taps = rng.normal(0, 2, size=M + 1)
        taps[-1] = -taps[:-1].sum()
        p = ControlParams(
            TAU, base.eps1 * rng.uniform(0.5, 1.5), base.eps2 * rng.uniform(0.5, 1.5), tuple(taps)
        )
        if convergence_rate(p, s) < 1:
            return p


def test_config_shapes():
    cfg = SimConfig(5, np.arange(4.0), np.zeros(4))
    assert cfg.x0.shape == (4, 1) and cfg.n == 4 and cfg.n_dim == 1
    with pytest.raises(ParameterError):
        SimConfig(0, np.zeros(4), np.zeros(4))
    with pytest.raises(ParameterError):
        SimConfig(5, np.zeros(4), np.zeros(5))
    with pytest.raises(ParameterError):
        SimConfig(5, np.zeros(4), [np.nan] * 4)
    with pytest.raises(ParameterError):
        simulate_consensus(P8, OPT_P8, SimConfig(5, np.zeros(4), np.zeros(4)))


def test_random_config_range_and_seed():
    a = SimConfig.random(8, 10, seed=3, n_dim=2)
    b = SimConfig.random(8, 10, seed=3, n_dim=2)
    np.testing.assert_array_equal(a.x0, b.x0)
    assert a.x0.shape == (8, 2)
    assert np.all(np.abs(a.x0) <= 10) and np.all(np.abs(a.v0) <= 10)


def test_disconnected_rejected():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = w[2, 3] = w[3, 2] = 1.0
    with pytest.raises(ConnectivityError):
        simulate_consensus(Graph(w), OPT_P8, SimConfig(3, np.zeros(4), np.zeros(4)))


def test_identical_agents_stay_together():
    x0 = np.full(8, 2.5)
    v0 = np.full(8, -0.75)
    traj = simulate_consensus(P8, OPT_P8, SimConfig(50, x0, v0))
    assert np.all(traj.e_norm == 0.0)
    k = np.arange(51)[:, None]
    np.testing.assert_allclose(traj.x[:, :, 0], np.broadcast_to(2.5 + k * TAU * -0.75, (51, 8)), atol=1e-12)
    np.testing.assert_allclose(traj.v[:, :, 0], -0.75, atol=1e-15)


def test_trajectory_layout():
    cfg = SimConfig.random(8, 30, seed=1, n_dim=3)
    traj = simulate_consensus(P8, OPT_P8, cfg)
    assert traj.x.shape == traj.v.shape == (31, 8, 3)
    assert traj.e_norm.shape == (31,) and np.all(traj.e_norm >= 0)
    assert traj.horizon == 30 and traj.n_dim == 3
    np.testing.assert_allclose(traj.times, 0.1 * np.arange(31))
    np.testing.assert_array_equal(traj.x[0], cfg.x0)
    assert traj.graph_digest == P8.digest()


def test_matches_naive_node_recursion():
    rng = np.random.default_rng(4)
    for M in (0, 1, 3):
        p = stable_random_params(rng, S_P8, M)
        cfg = SimConfig.random(8, 60, seed=M)
        traj = simulate_consensus(P8, p, cfg)
        nx, nv = naive_node_simulation(
            P8.weights, TAU, p.eps1, p.eps2, p.theta, cfg.x0[:, 0], cfg.v0[:, 0], 60
        )
        np.testing.assert_allclose(traj.x[:, :, 0], nx, atol=1e-9)
        np.testing.assert_allclose(traj.v[:, :, 0], nv, atol=1e-9)


def test_consensus_error_definition():
    cfg = SimConfig.random(8, 40, seed=2, n_dim=2)
    traj = simulate_consensus(C8, OPT_C8, cfg)
    xbar, vbar = cfg.x0.mean(axis=0), cfg.v0.mean(axis=0)
    k = np.arange(41)[:, None, None]
    ex = traj.x - (xbar + k * TAU * vbar)
    ev = traj.v - vbar
    direct = np.sqrt((ex**2).sum(axis=(1, 2)) + (ev**2).sum(axis=(1, 2)))
    np.testing.assert_allclose(traj.e_norm[:20], direct[:20], rtol=1e-9)


def test_decay_bound_at_horizon():
    r = r1_star(S_P8.lambda2, S_P8.lambdaN)
    for seed in range(5):
        e = simulate_consensus(P8, OPT_P8, SimConfig.random(8, 400, seed)).e_norm
        assert e[400] / e[0] <= (r + 0.02) ** 400


def dominant_period(p, s):
    """Steps per turn of the slowest complex mode, at least 10."""
    r = convergence_rate(p, s)
    steps = 10
    for lam in s.nonzero:
        for z in np.roots(char_poly(p, lam).coeffs):
            angle = abs(np.angle(z))
            if abs(abs(z) - r) < 1e-6 and 1e-6 < angle < math.pi - 1e-6:
                steps = max(steps, math.ceil(2 * math.pi / angle))
    return steps


@pytest.mark.parametrize("spec", ["path:8", "cycle:8", "cbp:3,5", "ws:8:k=2,p=0.3,seed=22", "ba:8:m=1,seed=9"])
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_decay_bound_envelope(spec, seed):
    # C is fitted over two full turns of the slowest oscillating mode; a fixed
    # 10-step window underestimates C when a turn is longer than 10 steps
    g = parse_graph_spec(spec)
    s = laplacian_spectrum(g)
    p = gains_m1(s.lambda2, s.lambdaN, TAU).params
    r = convergence_rate(p, s)
    fit = 2 * dominant_period(p, s)
    e = simulate_consensus(g, p, SimConfig.random(8, 400, seed)).e_norm
    scaled = e / r ** np.arange(e.size)
    C = scaled[: fit + 1].max()
    assert np.all(scaled[fit:] <= 1.05 * C)


def test_path_period_exceeds_ten_steps():
    assert dominant_period(OPT_P8, S_P8) == 26
    # why the fit window is tied to the period: ten steps cover well under
    # half a turn on the path, and the envelope overshoots that C
    e = simulate_consensus(P8, OPT_P8, SimConfig.random(8, 400, seed=1)).e_norm
    scaled = e / convergence_rate(OPT_P8, S_P8) ** np.arange(e.size)
    assert scaled[10:].max() > 1.05 * scaled[:11].max()


def test_nonzero_tap_sum_drifts():
    cfg = SimConfig.random(8, 50, seed=0)
    # memoryless gains that keep the disagreement stable, so only the mean moves
    p = ControlParams(TAU, 5.0, 5.0, (0.5,))
    assert convergence_rate(p, S_P8) < 1
    vbar = simulate_consensus(P8, p, cfg).mean_velocity()[:, 0]
    assert abs(vbar[50] - vbar[0]) > 1e-3
    # the mean obeys v(k+1) = (1 + tau * 0.5) v(k)
    np.testing.assert_allclose(vbar, vbar[0] * (1 + TAU * 0.5) ** np.arange(51), rtol=1e-10)


@pytest.mark.parametrize("M", [0, 1, 2, 3])
def test_conservation(M):
    rng = np.random.default_rng(50 + M)
    p = stable_random_params(rng, S_C8, M)
    cfg = SimConfig.random(8, 1000, seed=M, n_dim=2)
    traj = simulate_consensus(C8, p, cfg)
    v0bar, x0bar = cfg.v0.mean(axis=0), cfg.x0.mean(axis=0)
    np.testing.assert_allclose(traj.mean_velocity(), np.broadcast_to(v0bar, (1001, 2)), rtol=0, atol=1e-12)
    k = np.arange(1001)[:, None]
    np.testing.assert_allclose(traj.mean_position(), x0bar + k * TAU * v0bar, rtol=0, atol=1e-10)


def test_spatial_decoupling_exact():
    cfg = SimConfig.random(8, 200, seed=9, n_dim=2)
    both = simulate_consensus(C8, OPT_C8, cfg)
    for d in range(2):
        single = simulate_consensus(C8, OPT_C8, SimConfig(200, cfg.x0[:, d], cfg.v0[:, d]))
        np.testing.assert_array_equal(both.x[:, :, d], single.x[:, :, 0])
        np.testing.assert_array_equal(both.v[:, :, d], single.v[:, :, 0])


def test_mode_reconstruction_matches_nodes():
    rng = np.random.default_rng(12)
    for M in (0, 1, 2):
        p = stable_random_params(rng, S_C8, M)
        cfg = SimConfig.random(8, 100, seed=M, n_dim=2)
        xm, vm = simulate_modes(S_C8, p, cfg).reconstruct()
        traj = simulate_consensus(C8, p, cfg)
        assert np.max(np.abs(xm - traj.x)) < 1e-9
        assert np.max(np.abs(vm - traj.v)) < 1e-9


def test_zero_mode_identity():
    cfg = SimConfig.random(8, 60, seed=5)
    modes = simulate_modes(S_C8, OPT_C8, cfg)
    v1 = modes.v[:, 0, 0]
    np.testing.assert_allclose(v1, v1[0], atol=1e-12)
    np.testing.assert_allclose(modes.x[:, 0, 0], modes.x[0, 0, 0] + np.arange(61) * TAU * v1[0], atol=1e-10)


@pytest.mark.parametrize("index", [1, 3, 7])
def test_single_mode_decay(index):
    w = S_C8.eigenvectors[:, index]
    cfg = SimConfig(300, w, np.zeros(8))
    e = simulate_consensus(C8, OPT_C8, cfg).e_norm
    rho = mode_radii(OPT_C8, [S_C8.eigenvalues[index]])[0]
    assert estimate_rate(e, 100) == pytest.approx(rho, abs=0.02)


def test_modes_shape_checked():
    with pytest.raises(ParameterError):
        simulate_modes(S_C8, OPT_P8, SimConfig(3, np.zeros(5), np.zeros(5)))


def test_estimate_rate_examples():
    assert estimate_rate(0.5 ** np.arange(50), 20) == pytest.approx(0.5, abs=1e-12)
    assert estimate_rate(np.full(30, 3.0), 10) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ConvergenceFloor):
        estimate_rate(np.r_[np.ones(10), np.zeros(5)], 8)
    with pytest.raises(DomainError):
        estimate_rate(np.ones(10), 10)
    with pytest.raises(DomainError):
        estimate_rate(np.ones(10), 1)


def test_estimated_rate_on_path():
    e = simulate_consensus(P8, OPT_P8, SimConfig.random(8, 400, seed=0)).e_norm
    assert estimate_rate(e, 100) == pytest.approx(r1_star(S_P8.lambda2, S_P8.lambdaN), abs=0.02)


# formation ----------------------------------------------------------------


def square_plan(n=8):
    angles = np.pi / 4 * np.arange(1, n + 1)
    circle = np.c_[3 * np.cos(angles), 3 * np.sin(angles)]
    square = np.array([[0, 0], [2, 0], [4, 0], [4, 2], [4, 4], [2, 4], [0, 4], [0, 2]], float)
    return FormationPlan(((0, circle), (251, square)))


def test_plan_validation():
    with pytest.raises(ParameterError):
        FormationPlan(((1, np.zeros((8, 2))),))
    with pytest.raises(ParameterError):
        FormationPlan(((0, np.zeros((8, 2))), (0, np.zeros((8, 2)))))
    with pytest.raises(ParameterError):
        FormationPlan(((0, np.zeros((8, 2))), (5, np.zeros((8, 1)))))
    with pytest.raises(ParameterError):
        FormationPlan(())
    plan = square_plan()
    assert plan.offsets_at(250)[0, 0] == pytest.approx(3 * np.cos(np.pi / 4))
    assert plan.offsets_at(251)[2].tolist() == [4.0, 0.0]
    assert plan.relative(300)[2, 0].tolist() == [4.0, 0.0]


def test_formation_requires_one_tap():
    p = ControlParams(TAU, 1.0, 1.0, (0.0,))
    with pytest.raises(DomainError):
        simulate_formation(P8, p, FormationPlan.fixed(np.zeros(8)), SimConfig(3, np.zeros(8), np.zeros(8)))
    with pytest.raises(ParameterError):
        simulate_formation(
            P8, OPT_P8, FormationPlan.fixed(np.zeros((8, 2))), SimConfig(3, np.zeros(8), np.zeros(8))
        )


def test_zero_offsets_reproduce_consensus_bitwise():
    cfg = SimConfig.random(8, 300, seed=17, n_dim=2)
    plain = simulate_consensus(C8, OPT_C8, cfg)
    form = simulate_formation(C8, OPT_C8, FormationPlan.fixed(np.zeros((8, 2))), cfg)
    np.testing.assert_array_equal(plain.x, form.x)
    np.testing.assert_array_equal(plain.v, form.v)
    np.testing.assert_array_equal(plain.e_norm, form.e_norm)


def test_translation_invariance():
    cfg = SimConfig.random(8, 300, seed=4, n_dim=2)
    plan = square_plan()
    moved = FormationPlan(tuple((k, pos + np.array([5.0, -2.0])) for k, pos in plan.segments))
    a = simulate_formation(C8, OPT_C8, plan, cfg)
    b = simulate_formation(C8, OPT_C8, moved, cfg)
    np.testing.assert_allclose(a.x, b.x, atol=1e-10)
    np.testing.assert_allclose(a.v, b.v, atol=1e-10)
    np.testing.assert_allclose(a.formation_error, b.formation_error, atol=1e-10)


def test_formation_equals_shifted_consensus():
    rng = np.random.default_rng(21)
    offsets = rng.uniform(-3, 3, size=(8, 2))
    cfg = SimConfig.random(8, 200, seed=6, n_dim=2)
    form = simulate_formation(C8, OPT_C8, FormationPlan.fixed(offsets), cfg)
    shifted = simulate_consensus(C8, OPT_C8, SimConfig(200, cfg.x0 - offsets, cfg.v0))
    np.testing.assert_allclose(form.x - offsets, shifted.x, atol=1e-10)
    np.testing.assert_allclose(form.e_norm, shifted.e_norm, atol=1e-10)


def test_formation_error_matches_node_states():
    cfg = SimConfig.random(8, 120, seed=8, n_dim=2)
    plan = square_plan()
    traj = simulate_formation(C8, OPT_C8, plan, cfg)
    for k in (0, 10, 40):
        assert traj.formation_error[k] == pytest.approx(formation_gap(traj, plan, C8, k), rel=1e-9)


def test_circle_then_square_scenario():
    g = parse_graph_spec("ws:8:k=2,p=0.3,seed=22")
    s = laplacian_spectrum(g)
    p = formation_gains(s.lambda2, s.lambdaN, TAU).params
    i = np.arange(1, 9)
    cfg = SimConfig(500, np.c_[i, np.zeros(8)], np.c_[0.1 * i, 8 - 0.1 * i])
    traj = simulate_formation(g, p, square_plan(), cfg)
    err = traj.formation_error
    assert err[250] < 1e-3
    assert err[500] < 1e-3
    # the switch disturbs the formation before it settles again
    assert err[252] > 1e-1
    assert formation_gap(traj, square_plan(), g, 500) < 1e-3

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import gtrs_oracle, gtrs_reduced
from twtoa.errors import Degenerate, RankDeficient
from twtoa.gtrs import (GtrsSolution, build_gtrs, extract_estimate, gtrs_weights, phi,
                        secular_interval, solve_gtrs)
from twtoa.model import MeasurementBatch, NetworkScenario, SolverStatus
from twtoa.simulator import SimConfig, make_rng, simulate


def _noiseless(scenario):
    return simulate(scenario, SimConfig(noise_scale=0.0))


def _truth_y(sc):
    x, al = sc.target, sc.alpha
    return np.array([x @ x, x[0], x[1], al * al, al])


def test_dimensions(bench_scenario):
    p = build_gtrs(_noiseless(bench_scenario), bench_scenario.anchors, bench_scenario.c)
    m = bench_scenario.rounds * bench_scenario.n_anchors
    assert p.A.shape == (m, 5) and p.b.shape == (m,) and p.weights.shape == (m,)
    assert np.array_equal(np.diag(p.D), [0, 1, 1, 0, 1])
    assert np.array_equal(p.f, [-0.5, 0, 0, -0.5, 0])


def test_truth_satisfies_linear_system_and_constraint(bench_scenario):
    sc = bench_scenario
    p = build_gtrs(_noiseless(sc), sc.anchors, sc.c)
    y = _truth_y(sc)
    r = p.A @ y - p.b
    assert np.max(np.abs(r)) <= 1e-12 * np.max(np.abs(p.b))
    assert abs(p.constraint(y)) <= 1e-12 * (y[0] + y[3])


def test_per_anchor_weights_are_tiled(bench_scenario):
    sc = bench_scenario
    w = gtrs_weights(sc.target, sc.alpha, sc.anchors, sc.sigma, sc.gamma)
    p = build_gtrs(_noiseless(sc), sc.anchors, sc.c, w)
    np.testing.assert_array_equal(p.weights, np.tile(w, sc.rounds))


def test_duplicate_rows_are_rank_deficient():
    sc = NetworkScenario.from_meters([[800, 800]] * 5, [0.0, 0.0], c_sigma_m=1.0, rounds=1)
    with pytest.raises(RankDeficient):
        build_gtrs(_noiseless(sc), sc.anchors, sc.c)


def test_too_few_measurements():
    sc = NetworkScenario.from_meters([[800, 800], [800, -800], [-800, 0]], [0.0, 0.0],
                                     c_sigma_m=1.0, rounds=1)
    with pytest.raises(RankDeficient):
        build_gtrs(_noiseless(sc), sc.anchors, sc.c)


@pytest.mark.parametrize("n,k", [(5, 1), (6, 2), (8, 3)])
def test_noiseless_recovery(scenario_factory, n, k):
    sc = scenario_factory(make_rng(n, k), n=n, k=k)
    sol = solve_gtrs(build_gtrs(_noiseless(sc), sc.anchors, sc.c))
    rep = extract_estimate(sol)
    assert np.linalg.norm(rep.position - sc.target) <= 1e-5
    assert abs(rep.skew - sc.target_clock.skew) <= 1e-8
    assert sol.min_eig >= -1e-12


def test_phi_decreasing_and_bisection_budget(bench_scenario):
    sc = bench_scenario
    p = build_gtrs(simulate(sc, SimConfig(seed=3)), sc.anchors, sc.c)
    left = secular_interval(p)
    mus = left + np.abs(left) * np.geomspace(1e-6, 1e3, 25)
    vals = np.array([phi(p, m) for m in mus])
    assert np.all(np.diff(vals) < 0)
    sol = solve_gtrs(p)
    assert sol.bisection_steps <= 60
    assert sol.constraint_residual <= 1e-8


def _solution(y):
    return GtrsSolution(y=np.asarray(y, float), mu=0.0, phi_at_mu=0.0, bisection_steps=0)


def test_extract_examples():
    rep = extract_estimate(_solution([25, 3, 4, 1, 1]))
    assert np.array_equal(rep.position, [3, 4]) and rep.skew == 1.0
    assert rep.status is SolverStatus.CONVERGED
    rep = extract_estimate(_solution([25, 3, 4, 1.0002, 1.0001]))
    assert rep.skew == pytest.approx(0.9999, abs=1e-8)
    with pytest.raises(Degenerate):
        extract_estimate(_solution([25, 3, 4, 0.01, -0.1]))


def _random_problem(seed):
    rng = make_rng(seed)
    n = int(rng.integers(3, 6))
    k = int(rng.integers(1, 3))
    while k * n < 5:
        k += 1
    anchors = rng.uniform(-800, 800, (n, 2))
    target = rng.uniform(-800, 800, 2)
    sc = NetworkScenario.from_meters(anchors, target, c_sigma_m=10.0, skew=1.0001, rounds=k)
    return sc, build_gtrs(simulate(sc, SimConfig(), rng), anchors, sc.c)


@settings(max_examples=8)
@given(st.integers(0, 2**31 - 1))
def test_matches_dense_search(seed):
    try:
        sc, p = _random_problem(seed)
    except RankDeficient:
        return
    sol = solve_gtrs(p)
    _, _, scale = gtrs_reduced(p)
    ov, _ = gtrs_oracle(p, sc.target, grid=21)
    assert sol.objective / scale <= ov * (1 + 1e-6) + 1e-14
    assert sol.constraint_residual <= 1e-8
    assert sol.min_eig >= -1e-12


def test_noisy_batch_object_shapes():
    b = MeasurementBatch(np.ones((2, 3)), np.ones((2, 3)))
    assert b.rounds == 2 and b.n_anchors == 3

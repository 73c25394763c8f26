import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import central_diff
from twtoa.bench import ExperimentSpec, run_estimator
from twtoa.crlb import crlb_position
from twtoa.estimators import CccpConfig, MleState, amle, cccp_socp, lls, mle, sqls
from twtoa.estimators.cccp import build_subproblem
from twtoa.estimators.lls import weighted_ls
from twtoa.estimators.mle import amle_gradient, amle_objective, mle_gradient, mle_objective
from twtoa.model import NetworkScenario, SolverStatus, UnitScale, residuals
from twtoa.simulator import SimConfig, make_rng, simulate


def _quiet(rng, n=6, k=2, target=None):
    """Near-noiseless scenario: 1 mm nominal noise, drawn with zero scale."""
    spec = ExperimentSpec(n_anchors=n, rounds=k, fix_duplicate_anchor=True)
    if target is None:
        target = rng.uniform(-600, 600, 2)
    sc = spec.scenario(np.asarray(target, float), 1e-3)
    return sc, simulate(sc, SimConfig(noise_scale=0.0))


def _psi(sc):
    return np.concatenate([sc.target, [sc.target_clock.skew], sc.turnaround])


# -- MLE / AMLE ---------------------------------------------------------------

@settings(max_examples=10)
@given(st.integers(0, 2**31 - 1))
def test_mle_gradient_matches_finite_differences(seed):
    rng = make_rng(seed)
    sc = ExperimentSpec().scenario(rng.uniform(-700, 700, 2), 10.0)
    b = simulate(sc, SimConfig(), rng)
    args = (b, sc.anchors, sc.sigma, sc.gamma, sc.c)
    psi = _psi(sc) * (1 + 1e-4 * rng.standard_normal(3 + sc.n_anchors))
    g = mle_gradient(psi, *args)
    fd = central_diff(lambda p: mle_objective(p, *args), psi)
    assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


@settings(max_examples=10)
@given(st.integers(0, 2**31 - 1))
def test_amle_gradient_matches_finite_differences(seed):
    rng = make_rng(seed)
    sc = ExperimentSpec().scenario(rng.uniform(-700, 700, 2), 10.0)
    b = simulate(sc, SimConfig(), rng)
    args = (b, sc.anchors, sc.sigma, sc.gamma, sc.c)
    th = np.array([*(sc.target + rng.normal(0, 20, 2)), 1.0001 + 1e-4 * rng.standard_normal()])
    g = amle_gradient(th, *args)
    fd = central_diff(lambda p: amle_objective(p, *args), th)
    assert np.linalg.norm(g - fd) <= 1e-5 * max(1.0, np.linalg.norm(fd))


@pytest.mark.parametrize("method", ["MLE", "AMLE"])
def test_ml_noiseless_recovery(method):
    sc, b = _quiet(make_rng(1))
    rep = run_estimator(method, b, sc)
    assert rep.error(sc.target) <= 1e-5
    assert abs(rep.skew - sc.target_clock.skew) <= 1e-8


def test_mle_from_perturbed_start():
    sc, b = _quiet(make_rng(2))
    init = MleState(sc.target + [30.0, -20.0], 1.0, sc.turnaround * 1.01)
    rep = mle(b, sc.anchors, sc.sigma, sc.gamma, sc.c, init)
    assert rep.status is SolverStatus.CONVERGED
    assert rep.error(sc.target) <= 1e-5
    np.testing.assert_allclose(rep.turnaround, sc.turnaround, rtol=1e-8)


def test_mle_simplex_agrees_with_lm(bench_scenario):
    sc = bench_scenario
    b = simulate(sc, SimConfig(seed=4))
    init = MleState(sc.target, sc.target_clock.skew, sc.turnaround)
    lm = mle(b, sc.anchors, sc.sigma, sc.gamma, sc.c, init)
    nm = mle(b, sc.anchors, sc.sigma, sc.gamma, sc.c, init, simplex=True)
    assert np.linalg.norm(lm.position - nm.position) <= 1e-3
    assert nm.objective >= lm.objective - 1e-9 * max(1.0, lm.objective)


def test_small_gamma_turnaround_tracks_measurement(bench_scenario):
    # with a near-perfect turn-around measurement the MLE keeps T at its sample mean
    sc = bench_scenario
    b = simulate(sc, SimConfig(seed=5))
    rep = mle(b, sc.anchors, sc.sigma, sc.gamma * 1e-6, sc.c,
              MleState(sc.target, sc.target_clock.skew, sc.turnaround))
    np.testing.assert_allclose(rep.turnaround, b.t_hat.mean(axis=0), rtol=1e-9)


def test_amle_close_to_mle():
    spec = ExperimentSpec(n_anchors=6)
    err = {"MLE": [], "AMLE": []}
    for t in range(40):
        rng = make_rng(8, t)
        sc = spec.scenario(rng.uniform(-700, 700, 2), 10.0)
        b = simulate(sc, SimConfig(), rng)
        for m in err:
            err[m].append(run_estimator(m, b, sc).error(sc.target) ** 2)
    assert np.sqrt(np.mean(err["AMLE"])) <= 2 * np.sqrt(np.mean(err["MLE"]))


# -- LLS / SQLS ----------------------------------------------------------------

@pytest.mark.parametrize("target", [(300.0, 200.0), (-450.0, -380.0), (-600.0, 100.0)])
@pytest.mark.parametrize("method", ["LLS", "SQLS"])
def test_closed_form_noiseless_recovery(method, target):
    sc, b = _quiet(make_rng(3), target=target)
    rep = run_estimator(method, b, sc)
    assert rep.error(sc.target) <= 1e-5
    assert abs(rep.skew - sc.target_clock.skew) <= 1e-8
    assert rep.status is SolverStatus.CONVERGED


def test_weighted_ls_exact_fit():
    rng = make_rng(4)
    A = rng.standard_normal((12, 5))
    y = rng.standard_normal(5)
    est, cov, reg = weighted_ls(A, A @ y, np.ones(12))
    np.testing.assert_allclose(est, y, atol=1e-12)
    assert cov.shape == (5, 5) and not reg


def test_lls_diagnostics(bench_scenario):
    sc = bench_scenario
    rep = lls(simulate(sc, SimConfig(seed=6)), sc.anchors, sc.c, sc.sigma, sc.gamma)
    for key in ("y", "theta", "alpha_sign_flip", "regularised"):
        assert key in rep.diagnostics
    assert rep.skew > 0


def test_sqls_reweighting_helps_and_alpha_positive():
    spec = ExperimentSpec(n_anchors=6)
    better = 0
    trials = 30
    for t in range(trials):
        rng = make_rng(9, t)
        sc = spec.scenario(rng.uniform(-700, 700, 2), 10.0)
        rep = sqls(simulate(sc, SimConfig(), rng), sc.anchors, sc.c, sc.sigma, sc.gamma)
        d = rep.diagnostics
        better += d["pass2_objective"] <= d["pass1_objective_in_pass2_weights"] * (1 + 1e-9)
        assert rep.alpha > 0
    assert better >= 0.9 * trials


# -- CCCP ----------------------------------------------------------------------

def test_cccp_noiseless_contraction():
    sc, b = _quiet(make_rng(5))
    rep = cccp_socp(b, sc.anchors, sc.c, CccpConfig(max_outer=3))
    tr = rep.diagnostics["trace"]
    assert tr[3] <= 1e-6 * tr[0]
    assert rep.error(sc.target) <= 1e-2


@pytest.mark.parametrize("seed", range(5))
def test_cccp_trace_non_increasing(seed):
    rng = make_rng(10, seed)
    sc = ExperimentSpec().scenario(rng.uniform(-700, 700, 2), 10.0)
    b = simulate(sc, SimConfig(), rng)
    rep = cccp_socp(b, sc.anchors, sc.c, CccpConfig(max_outer=8, x0=tuple(rng.uniform(-800, 800, 2))))
    tr = rep.diagnostics["trace"]
    assert np.all(np.diff(tr) <= 1e-9 * tr[0])


def test_cccp_current_iterate_feasible_for_its_subproblem(bench_scenario):
    sc = bench_scenario
    b = simulate(sc, SimConfig(seed=7))
    cfg = CccpConfig()
    scale = UnitScale.for_anchors(sc.anchors, sc.c)
    xj = np.array([250.0, 40.0])
    alpha = 0.9999
    r = residuals(xj, alpha, b, sc.anchors, sc.c)
    prob, ndeg = build_subproblem(scale.length_(xj), scale.time(b.z), scale.time(b.t_hat),
                                  scale.length_(sc.anchors), cfg, 100.0, 0.0)
    v = np.concatenate([scale.length_(xj), [alpha], np.abs(scale.time(r)).reshape(-1)])
    assert ndeg == 0
    assert prob.max_violation(v) <= 1e-12
    # its objective equals the l1 residual: the majoriser touches at x_j
    assert prob.cost @ v == pytest.approx(np.abs(scale.time(r)).sum(), rel=1e-12)


def test_cccp_start_on_anchor_uses_subgradient(bench_scenario):
    sc = bench_scenario
    b = simulate(sc, SimConfig(seed=8))
    rep = cccp_socp(b, sc.anchors, sc.c, CccpConfig(max_outer=3, x0=tuple(sc.anchors[0])))
    assert rep.diagnostics["degenerate_steps"] >= 1
    assert np.all(np.isfinite(rep.position))


def test_cccp_config_validation():
    with pytest.raises(ValueError):
        CccpConfig(max_outer=0)
    with pytest.raises(ValueError):
        CccpConfig(alpha0=3.0)


# -- cross-estimator properties ------------------------------------------------

@pytest.mark.parametrize("method", ["MLE", "AMLE", "LLS", "SQLS", "CCCP"])
def test_anchor_permutation_invariance(method, bench_scenario):
    sc = bench_scenario
    b = simulate(sc, SimConfig(seed=11))
    perm = np.array([3, 0, 5, 1, 4, 2])
    sp = NetworkScenario(sc.anchors[perm], sc.target, sc.target_clock, sc.turnaround[perm],
                         sc.sigma, sc.gamma, sc.c, sc.rounds)
    cfg = CccpConfig(max_outer=3, x0=(10.0, 20.0))
    a = run_estimator(method, b, sc, cfg)
    p = run_estimator(method, b.permute_anchors(perm), sp, cfg)
    assert np.linalg.norm(a.position - p.position) <= 1e-6 * max(1.0, np.linalg.norm(a.position))


def test_l1_and_l2_agree_at_low_noise():
    spec = ExperimentSpec(n_anchors=6)
    for t in range(10):
        rng = make_rng(12, t)
        sc = spec.scenario(rng.uniform(-600, 600, 2), 1.0)
        b = simulate(sc, SimConfig(), rng)
        sd = np.sqrt(crlb_position(sc))
        m = run_estimator("MLE", b, sc)
        c = cccp_socp(b, sc.anchors, sc.c, CccpConfig(max_outer=20, x0=tuple(sc.target)))
        assert np.linalg.norm(m.position - c.position) <= 3 * sd

import numpy as np
import pytest

from clse import filters
from clse.filters import (CLS, DCD_RCLS, RCLS, DcdParams, cls_step,
                          covariance_update, dcd_rcls_step, dcd_solve,
                          rcls_step, state_init)
from clse.model import DataStream, generate_scenario


@pytest.fixture
def scenario():
    return generate_scenario(1, 7, 3, 0.995, 1e3, 0.1)


def run_steps(scenario, algorithm, n, seed=0, params=None, delta=1e-2):
    state = state_init(scenario, delta, algorithm)
    X, y, _ = DataStream(scenario, seed).take(n)
    ws = []
    for i in range(n):
        covariance_update(state, X[i], y[i], scenario.lam)
        if algorithm == CLS:
            ws.append(cls_step(state, scenario).copy())
        elif algorithm == RCLS:
            ws.append(rcls_step(state, scenario).copy())
        else:
            ws.append(dcd_rcls_step(state, scenario, params).copy())
    return state, np.array(ws)


def test_dcd_params_validation():
    DcdParams(H=0.5, M=4, Nu=1)
    with pytest.raises(ValueError):
        DcdParams(H=3.0)
    with pytest.raises(ValueError):
        DcdParams(M=0)
    with pytest.raises(ValueError):
        DcdParams(Nu=0)


def test_state_init_starting_points(scenario):
    st = state_init(scenario, 1e-2, CLS)
    assert np.allclose(scenario.C.T @ st.w, scenario.f, atol=1e-10)
    assert np.allclose(st.phi, 1e-2 * np.eye(7)) and np.all(st.p == 0.0)
    assert np.all(state_init(scenario, 1e-2, DCD_RCLS).w == 0.0)
    with pytest.raises(ValueError):
        state_init(scenario, 0.0)
    with pytest.raises(ValueError):
        state_init(scenario, 1e-2, "nope")


def test_covariance_update_recursion(scenario):
    state = state_init(scenario, 1e-2)
    x = np.arange(7.0)
    covariance_update(state, x, 2.0, 0.9)
    assert np.allclose(state.phi, 0.9 * 1e-2 * np.eye(7) + np.outer(x, x))
    assert np.allclose(state.p, 2.0 * x)
    assert state.n == 1


def test_covariance_steady_scale(scenario):
    # E[phi] converges to R / (1 - lambda); check the trace to 10%
    sc = scenario.with_params(lam=0.99)
    state, _ = run_steps(sc, RCLS, 3000, seed=3)
    expected = np.trace(sc.R) / (1.0 - sc.lam)
    assert np.trace(state.phi) == pytest.approx(expected, rel=0.10)


def test_cls_step_satisfies_kkt(scenario):
    # the estimate solves min (w'phi w - 2 p'w) s.t. C'w = f:
    # feasibility plus gradient in the column space of C
    state, ws = run_steps(scenario, CLS, 30, seed=1)
    w = ws[-1]
    assert np.allclose(scenario.C.T @ w, scenario.f, atol=1e-9)
    grad = state.phi @ w - state.p
    coeffs, *_ = np.linalg.lstsq(scenario.C, grad, rcond=None)
    assert np.allclose(scenario.C @ coeffs, grad, atol=1e-7)


def test_rcls_step_solves_augmented_system(scenario):
    state, ws = run_steps(scenario, RCLS, 30, seed=1)
    aug = state.phi + scenario.mu * scenario.C @ scenario.C.T
    rhs = state.p + scenario.mu * scenario.C @ scenario.f
    assert np.allclose(aug @ ws[-1], rhs, atol=1e-8 * np.linalg.norm(rhs))


def test_rcls_zero_weight_is_plain_ls(scenario):
    sc = scenario.with_params(mu=0.0)
    state, ws = run_steps(sc, RCLS, 30, seed=1)
    assert np.allclose(ws[-1], np.linalg.solve(state.phi, state.p), atol=1e-10)


def test_rcls_approaches_cls_monotonically(scenario):
    # the gap ||w_rcls - w_cls|| shrinks as the weight grows
    _, ws_cls = run_steps(scenario, CLS, 40, seed=2)
    gaps = []
    for mu in (1e2, 1e4, 1e6, 1e8):
        _, ws = run_steps(scenario.with_params(mu=mu), RCLS, 40, seed=2)
        gaps.append(np.linalg.norm(ws[-1] - ws_cls[-1]))
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6


def test_dcd_solve_identity_system_exact():
    # on aug = I with dyadic targets the solver lands exactly
    params = DcdParams(H=2.0, M=8, Nu=50)
    rhs = np.array([0.5, -0.25])
    s, rho, updates = dcd_solve(np.eye(2), rhs, np.zeros(2), params)
    assert np.array_equal(s, rhs)
    assert np.all(rho == 0.0)
    assert updates == 2


def test_dcd_solve_results_on_dyadic_grid():
    rng = np.random.default_rng(0)
    params = DcdParams(H=2.0, M=10, Nu=200)
    spacing = params.H * 2.0 ** -params.M
    for _ in range(20):
        Z = rng.standard_normal((5, 5))
        aug = Z @ Z.T + np.eye(5)
        rhs = rng.standard_normal(5)
        warm = rng.standard_normal(5)
        s, _, _ = dcd_solve(aug, rhs, warm, params)
        steps = (s - warm) / spacing
        assert np.allclose(steps, np.round(steps), atol=1e-9)


def test_dcd_solve_respects_update_budget():
    rng = np.random.default_rng(1)
    Z = rng.standard_normal((6, 6))
    aug = Z @ Z.T + np.eye(6)
    rhs = rng.standard_normal(6)
    _, _, updates = dcd_solve(aug, rhs, np.zeros(6), DcdParams(Nu=3))
    assert updates <= 3


def test_dcd_solve_converges_with_budget():
    rng = np.random.default_rng(2)
    Z = rng.standard_normal((6, 6))
    aug = Z @ Z.T + np.eye(6)
    exact = rng.standard_normal(6)
    rhs = aug @ exact
    s, _, _ = dcd_solve(aug, rhs, np.zeros(6), DcdParams(H=2.0, M=20, Nu=10_000))
    assert np.max(np.abs(s - exact)) < 1e-4


def test_dcd_rcls_tracks_exact_rcls(scenario):
    sc = scenario.with_params(mu=10.0)
    params = DcdParams(H=2.0, M=30, Nu=1000)
    _, ws_exact = run_steps(sc, RCLS, 300, seed=4)
    _, ws_dcd = run_steps(sc, DCD_RCLS, 300, seed=4, params=params)
    assert np.max(np.abs(ws_exact[50:] - ws_dcd[50:])) < 1e-6


def test_cls_equals_rcls_at_huge_weight(scenario):
    sc = scenario.with_params(mu=1e8)
    _, ws_cls = run_steps(sc, CLS, 60, seed=5)
    _, ws_rcls = run_steps(sc, RCLS, 60, seed=5)
    gap = np.linalg.norm(ws_cls[10:] - ws_rcls[10:], axis=1)
    assert np.max(gap / np.linalg.norm(ws_cls[10:], axis=1)) < 1e-5

import json

import numpy as np
import pytest

from clse import theory
from clse.model import Scenario, derive_context, generate_scenario


@pytest.fixture
def scenario():
    return generate_scenario(1, 7, 3, 0.995, 1e3, 0.1)


def test_build_s_is_symmetric(scenario):
    ctx = derive_context(scenario)
    S = theory.build_S(ctx, scenario)
    assert np.allclose(S, S.T, atol=1e-12 * np.max(np.abs(S)))


def test_stability_implies_contraction():
    # whenever the sufficient condition holds, S must be a contraction
    rng = np.random.default_rng(0)
    checked = 0
    for i in range(50):
        lam = float(rng.uniform(0.9, 0.999))
        mu = float(10.0 ** rng.uniform(-1, 5))
        sc = generate_scenario(500 + i, 7, 3, lam, mu, 0.1)
        ctx = derive_context(sc)
        lhs, stable = theory.stability_check_rcls(ctx, sc)
        if stable:
            S = theory.build_S(ctx, sc)
            assert np.max(np.abs(np.linalg.eigvalsh((S + S.T) / 2))) < 1.0
            checked += 1
    assert checked > 10  # the sweep must actually exercise the stable branch


def test_perfect_memory_limit(scenario):
    # as lambda -> 1 the fluctuation terms vanish; only the bias remains
    sc = scenario.with_params(lam=1.0 - 1e-9)
    ctx = derive_context(sc)
    bias = theory.predict_mean_deviation_rcls(ctx, sc)
    assert theory.predict_msd_rcls(ctx, sc) == pytest.approx(
        float(bias @ bias), rel=1e-4)
    mism = theory.predict_mean_mismatch_rcls(ctx)
    assert theory.predict_msm_rcls(ctx, sc) == pytest.approx(
        float(mism @ mism), rel=1e-4)


def test_large_weight_limit_matches_cls(scenario):
    sc = scenario.with_params(mu=1e10)
    ctx = derive_context(sc)
    msd_rcls = theory.predict_msd_rcls(ctx, sc)
    msd_cls = theory.predict_msd_cls(ctx, sc)
    assert abs(msd_rcls - msd_cls) / msd_cls < 1e-3
    assert theory.predict_msm_rcls(ctx, sc) < 1e-12


def test_msm_decreases_with_weight(scenario):
    values = []
    for mu in (1e-1, 1e0, 1e1, 1e2, 1e3):
        sc = scenario.with_params(mu=mu)
        values.append(theory.predict_msm_rcls(derive_context(sc), sc))
    assert all(a > b for a, b in zip(values, values[1:]))


def test_lambda_bound_identity_covariance(scenario):
    # with R = I the projector terms are exact: T = (L - K) + 1, bound T/(T+2)
    sc = Scenario(h=scenario.h, C=scenario.C, f=scenario.f, R=np.eye(7),
                  eta=0.1, lam=0.995, mu=1e3)
    ctx = derive_context(sc)
    assert theory.lambda_lower_bound_cls(ctx, sc) == pytest.approx(5.0 / 7.0,
                                                                   abs=1e-12)


def test_lambda_bound_in_unit_interval():
    for i in range(20):
        sc = generate_scenario(300 + i, 7, 3, 0.995, 1e3, 0.1)
        ctx = derive_context(sc)
        assert 0.0 < theory.lambda_lower_bound_cls(ctx, sc) < 1.0


def test_rho_projector_complement_is_one(scenario):
    ctx = derive_context(scenario)
    assert theory.rho_projector_complement(ctx, scenario) == pytest.approx(
        1.0, abs=1e-10)


def test_predict_report_round_trip(scenario):
    rep = theory.predict_report(scenario)
    d = json.loads(rep.to_json())
    assert d["msd_rcls"] == rep.msd_rcls
    assert d["msm_cls"] == 0.0
    assert list(np.asarray(d["S"]).shape) == [7, 7]
    row = rep.csv_row(scenario)
    assert row["seed"] == 1 and row["mu"] == 1e3
    assert np.allclose(d["mean_deviation_cls"], 0.0)


def test_predictions_positive(scenario):
    rep = theory.predict_report(scenario)
    assert rep.msd_rcls > 0.0
    assert rep.msm_rcls > 0.0
    assert rep.msd_cls > 0.0

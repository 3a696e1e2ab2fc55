"""Pure-Python trial-loop kernel.

Reference implementation of the per-trial estimator loop, built directly
on the step functions in clse.filters. The compiled kernel in _native.pyx
reimplements the same loop; both satisfy the contract of
kernels.run_trial_kernel and agree to floating-point rounding.
"""

import numpy as np

from .. import filters
from ..numerics import NotPositiveDefinite

ALGO_IDS = {filters.CLS: 0, filters.RCLS: 1, filters.DCD_RCLS: 2}


def run_trial_kernel(algo_id, X, y, scenario, g, delta, dcd):
    """Run one trial over pre-generated data.

    X : (n_iters, L) input vectors, y : (n_iters,) outputs
    g : optimal constrained solution (deviation reference)
    Returns (d2, m2, updates, w_final); steps where the estimator system
    is not yet positive-definite are recorded as NaN.
    """
    n_iters = X.shape[0]
    algorithm = {v: k for k, v in ALGO_IDS.items()}[algo_id]
    state = filters.state_init(scenario, delta, algorithm)
    C, f, lam = scenario.C, scenario.f, scenario.lam

    d2 = np.empty(n_iters)
    m2 = np.empty(n_iters)
    updates = np.zeros(n_iters, dtype=np.int64)

    for i in range(n_iters):
        filters.covariance_update(state, X[i], y[i], lam)
        try:
            if algo_id == 0:
                filters.cls_step(state, scenario)
            elif algo_id == 1:
                filters.rcls_step(state, scenario)
            else:
                aug = state.phi + scenario.mu * (C @ C.T)
                rhs = state.p + scenario.mu * (C @ f)
                state.w, _, updates[i] = filters.dcd_solve(aug, rhs, state.w, dcd)
        except NotPositiveDefinite:
            d2[i] = np.nan
            m2[i] = np.nan
            continue
        d = state.w - g
        m = C.T @ state.w - f
        d2[i] = d @ d
        m2[i] = m @ m

    return d2, m2, updates, state.w.copy()

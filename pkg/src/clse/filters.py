"""The three online estimators: CLS, rCLS, and DCD-rCLS.

All three share the same running state (exponentially-weighted covariance
Phi, cross-covariance p, current estimate w). CLS solves the constrained
normal equations through a Lagrangian closed form each step; rCLS solves
the weight-augmented system exactly; DCD-rCLS solves the same augmented
system approximately with dichotomous coordinate descent, warm-started
from the previous estimate.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import numerics

__all__ = [
    "EstimatorState", "DcdParams",
    "state_init", "covariance_update",
    "cls_step", "rcls_step", "dcd_solve", "dcd_rcls_step",
]

CLS = "cls"
RCLS = "rcls"
DCD_RCLS = "dcd-rcls"
ALGORITHMS = (CLS, RCLS, DCD_RCLS)


@dataclass
class DcdParams:
    """Dichotomous coordinate descent controls.

    H : initial step amplitude (a power of two, so halving is exact)
    M : number of bit levels; the solution grid spacing is H * 2**-M
    Nu : maximum successful coordinate updates per solve
    """

    H: float = 2.0
    M: int = 15
    Nu: int = 8

    def __post_init__(self):
        if self.H <= 0.0 or math.frexp(self.H)[0] != 0.5:
            raise ValueError(f"H must be a positive power of two, got {self.H}")
        if not (1 <= self.M <= 32):
            raise ValueError(f"M must be in [1, 32], got {self.M}")
        if self.Nu < 1:
            raise ValueError(f"Nu must be >= 1, got {self.Nu}")


@dataclass
class EstimatorState:
    """Mutable per-trial running state. Never share one across threads."""

    phi: np.ndarray
    p: np.ndarray
    w: np.ndarray
    n: int = 0


def state_init(scenario, delta, algorithm=RCLS):
    """Regularized start: phi = delta I, p = 0, w per algorithm.

    CLS and rCLS start at the solution of their own equations with p = 0;
    DCD-rCLS starts at w = 0 (its solver converges onto the solution).
    """
    if delta <= 0.0:
        raise ValueError(f"delta must be > 0, got {delta}")
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    L = scenario.L
    C, f = scenario.C, scenario.f
    phi = delta * np.eye(L)
    p = np.zeros(L)
    if algorithm == CLS:
        # with p = 0 the closed form reduces to the minimum-norm point on C'w = f
        w = C @ np.linalg.solve(C.T @ C, f)
    elif algorithm == RCLS:
        w = numerics.solve_spd(phi + scenario.mu * (C @ C.T), scenario.mu * (C @ f))
    else:
        w = np.zeros(L)
    return EstimatorState(phi=phi, p=p, w=w, n=0)


def covariance_update(state, x, y, lam):
    """phi <- lam*phi + x x', p <- lam*p + y x; in place, returns state."""
    state.phi *= lam
    state.phi += np.outer(x, x)
    state.p *= lam
    state.p += y * x
    state.n += 1
    return state


def cls_step(state, scenario):
    """Constrained exponentially-weighted LS estimate via Lagrange multipliers."""
    C, f = scenario.C, scenario.f
    u = numerics.solve_spd(state.phi, state.p)       # Phi^-1 p
    V = numerics.solve_spd(state.phi, C)             # Phi^-1 C
    t = numerics.solve_spd(_symmetrize(C.T @ V), f - C.T @ u)
    state.w = u + V @ t
    return state.w


def rcls_step(state, scenario):
    """Weight-augmented unconstrained LS estimate (exact solve)."""
    C, f, mu = scenario.C, scenario.f, scenario.mu
    aug = state.phi + mu * (C @ C.T)
    state.w = numerics.solve_spd(_symmetrize(aug), state.p + mu * (C @ f))
    return state.w


def dcd_solve(aug, rhs, warm, params):
    """Leading-element dichotomous coordinate descent on aug @ s = rhs.

    Starts from the warm solution; step size begins at H/2 and halves
    through M bit levels, so every entry of the result lies on the dyadic
    grid warm + j * H * 2**-M. Stops after Nu successful updates or once
    all bit levels are exhausted. Returns (s, residual, updates_used).
    """
    aug = np.asarray(aug, dtype=float)
    s = np.array(warm, dtype=float)
    rho = np.asarray(rhs, dtype=float) - aug @ s
    alpha = params.H / 2.0
    level = 1
    updates = 0
    diag = np.diag(aug)
    while updates < params.Nu:
        k = int(np.argmax(np.abs(rho)))  # ties: lowest index, by argmax contract
        if abs(rho[k]) > (alpha / 2.0) * diag[k]:
            step = math.copysign(alpha, rho[k])
            s[k] += step
            rho -= step * aug[:, k]
            updates += 1
        else:
            if level >= params.M:
                break
            alpha /= 2.0
            level += 1
    return s, rho, updates


def dcd_rcls_step(state, scenario, params):
    """rCLS estimate via DCD on the augmented normal equations, warm-started."""
    C, f, mu = scenario.C, scenario.f, scenario.mu
    aug = state.phi + mu * (C @ C.T)
    s, _, _ = dcd_solve(aug, state.p + mu * (C @ f), state.w, params)
    state.w = s
    return state.w


def _symmetrize(M):
    return (M + M.T) / 2.0

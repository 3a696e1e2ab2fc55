"""Closed-form performance predictions for the rCLS and CLS estimators.

Everything here is exact dense arithmetic over a Scenario and its
DerivedContext; no simulation enters this module. All returned values are
linear (not dB); conversion to dB happens at the reporting layer.

Spectral radii of non-symmetric products are computed through symmetric
similarity transforms: A R is similar to R^{1/2} A R^{1/2}, and I - G is
similar to the orthogonal projector I - R^{-1/2} C (C' R^-1 C)^-1 C' R^{-1/2},
so symmetric eigensolvers suffice everywhere.
"""

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import numerics
from .model import derive_context

__all__ = [
    "PredictionReport", "predict_report",
    "predict_mean_deviation_rcls", "build_S", "stability_check_rcls",
    "predict_msd_rcls", "predict_mean_mismatch_rcls", "predict_msm_rcls",
    "predict_msd_cls", "lambda_lower_bound_cls",
]


@dataclass(frozen=True)
class PredictionReport:
    """All closed-form theory values for one Scenario."""

    mean_deviation_rcls: np.ndarray
    msd_rcls: float
    mean_mismatch_rcls: np.ndarray
    msm_rcls: float
    stability_lhs_rcls: float
    stable_rcls: bool
    mean_deviation_cls: np.ndarray  # identically zero
    msd_cls: float
    msm_cls: float                  # identically zero
    lambda_lower_bound_cls: float
    S: np.ndarray
    rho_S: float

    def to_dict(self):
        d = asdict(self)
        for key, val in d.items():
            if isinstance(val, np.ndarray):
                d[key] = val.tolist()
            elif isinstance(val, (np.floating, np.bool_)):
                d[key] = val.item()
        return d

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def csv_row(self, scenario):
        """One flat record keyed by (scenario seed, lambda, mu, eta)."""
        return {
            "seed": scenario.seed,
            "lambda": scenario.lam,
            "mu": scenario.mu,
            "eta": scenario.eta,
            "msd_rcls": self.msd_rcls,
            "msm_rcls": self.msm_rcls,
            "msd_cls": self.msd_cls,
            "msm_cls": self.msm_cls,
            "stability_lhs_rcls": self.stability_lhs_rcls,
            "stable_rcls": self.stable_rcls,
            "rho_S": self.rho_S,
            "lambda_lower_bound_cls": self.lambda_lower_bound_cls,
        }


def predict_mean_deviation_rcls(ctx, scenario):
    """Asymptotic bias of the rCLS estimate: A R e."""
    return ctx.A @ scenario.R @ ctx.e


def build_S(ctx, scenario):
    """Mean-square propagation matrix of the deviation recursion."""
    lam, lh = scenario.lam, ctx.lambda_hat
    R, C, mu = scenario.R, scenario.C, scenario.mu
    A = ctx.A
    A2 = A @ A
    CCt = C @ C.T
    AR = A @ R
    tr_a2r = numerics.trace(A2 @ R)
    S = ((2.0 * lam - 1.0) * np.eye(scenario.L)
         + lh ** 2 * (tr_a2r * R
                      + (lh * mu) ** 2 * (CCt @ A2 @ CCt)
                      + AR.T + AR))
    return S


def stability_check_rcls(ctx, scenario):
    """Sufficient mean-square stability condition; stable iff lhs < 2."""
    lh = ctx.lambda_hat
    R, C, mu = scenario.R, scenario.C, scenario.mu
    A = ctx.A
    A2 = A @ A
    CCt = C @ C.T
    tr_a2r = numerics.trace(A2 @ R)
    rho_r = numerics.spectral_radius(R)
    rho_quad = numerics.spectral_radius(CCt @ A2 @ CCt)  # symmetric product
    rho_ar = _rho_AR(A, R)
    lhs = lh * (tr_a2r * rho_r + (lh * mu) ** 2 * rho_quad + 2.0 * rho_ar)
    return float(lhs), bool(lhs < 2.0)


def predict_msd_rcls(ctx, scenario):
    """Steady-state mean-square deviation of the rCLS estimate."""
    lam, lh = scenario.lam, ctx.lambda_hat
    R, eta = scenario.R, scenario.eta
    A, e = ctx.A, ctx.e
    A2 = A @ A
    Re = R @ e
    noise_core = (float(e @ Re) + eta) * R + 2.0 * np.outer(Re, Re)
    tr_a2r = numerics.trace(A2 @ R)
    fluct = (lh / 2.0) * numerics.trace(A2 @ noise_core)
    bias_gain = lam * A - lh * (tr_a2r * np.eye(scenario.L) + A2 @ R)
    cross = float(Re @ bias_gain @ (A @ Re))
    return float(fluct + cross)


def predict_mean_mismatch_rcls(ctx):
    """Asymptotic mean constraint mismatch: B r."""
    return ctx.B @ ctx.r


def predict_msm_rcls(ctx, scenario):
    """Steady-state mean-square mismatch of the rCLS estimate."""
    lam = scenario.lam
    C, R, eta = scenario.C, scenario.R, scenario.eta
    B2 = ctx.B @ ctx.B
    CtRinvC = C.T @ numerics.solve_spd(R, C)
    core = ((1.0 - lam) / (1.0 + lam)) * eta * CtRinvC + np.outer(ctx.r, ctx.r)
    return float(numerics.trace(B2 @ core))


def predict_msd_cls(ctx, scenario):
    """Steady-state mean-square deviation of the CLS estimate (mu -> inf limit)."""
    lh = ctx.lambda_hat
    R, eta = scenario.R, scenario.eta
    e = ctx.e
    Re = R @ e
    P = (np.eye(scenario.L) - ctx.G) @ numerics.inverse_spd(R)
    noise_core = (float(e @ Re) + eta) * R + 2.0 * np.outer(Re, Re)
    return float((lh / 2.0) * numerics.trace(P @ P @ noise_core))


def lambda_lower_bound_cls(ctx, scenario):
    """Lower bound on the forgetting factor for CLS mean-square stability."""
    R = scenario.R
    G = ctx.G
    P = (np.eye(scenario.L) - G) @ numerics.inverse_spd(R)
    T = (numerics.trace(P) * numerics.spectral_radius(R)
         + numerics.spectral_radius(G.T @ G))
    return float(T / (T + 2.0))


def rho_projector_complement(ctx, scenario):
    """Spectral radius of I - G via its symmetric similarity transform."""
    L = scenario.L
    # with R = F F', the map F' G F'^-T is the orthogonal projector onto
    # the column space of F^-1 C, so symmetric eigensolvers apply
    F = numerics.cholesky_factor(scenario.R)
    M = F.T @ (np.eye(L) - ctx.G) @ np.linalg.inv(F.T)
    return numerics.spectral_radius((M + M.T) / 2.0)


def predict_report(scenario, ctx=None):
    """Evaluate every closed-form prediction for one Scenario."""
    if ctx is None:
        ctx = derive_context(scenario)
    S = build_S(ctx, scenario)
    lhs, stable = stability_check_rcls(ctx, scenario)
    return PredictionReport(
        mean_deviation_rcls=predict_mean_deviation_rcls(ctx, scenario),
        msd_rcls=predict_msd_rcls(ctx, scenario),
        mean_mismatch_rcls=predict_mean_mismatch_rcls(ctx),
        msm_rcls=predict_msm_rcls(ctx, scenario),
        stability_lhs_rcls=lhs,
        stable_rcls=stable,
        mean_deviation_cls=np.zeros(scenario.L),
        msd_cls=predict_msd_cls(ctx, scenario),
        msm_cls=0.0,
        lambda_lower_bound_cls=lambda_lower_bound_cls(ctx, scenario),
        S=S,
        rho_S=numerics.spectral_radius((S + S.T) / 2.0),
    )


def _rho_AR(A, R):
    """rho{A R} through the symmetric similarity R^{1/2} A R^{1/2}."""
    w, V = np.linalg.eigh((R + R.T) / 2.0)
    Rhalf = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return numerics.spectral_radius(Rhalf @ A @ Rhalf)

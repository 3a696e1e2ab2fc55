"""Scenario definition, seeded generation, data synthesis, and derived context.

A Scenario bundles the ground-truth system (h, C, f, R, eta) with the
algorithm parameters (lambda, mu) and is the single source of truth for a
run. All randomness is derived from explicit integer seeds through
numpy.random.SeedSequence, so every quantity is reproducible bit-for-bit.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .numerics import MAX_DIM

__all__ = [
    "Scenario", "DerivedContext", "DataStream",
    "generate_scenario", "optimal_solution", "derive_context", "data_stream",
]

GAUSSIAN = "gaussian"
UNIFORM = "uniform"

_RANK_ATTEMPTS = 100


class RankDeficiencyPersists(Exception):
    """Constraint-matrix regeneration kept producing rank-deficient draws."""


class InvalidDimensions(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Ground-truth system plus algorithm parameters.

    h : (L,) unit-norm true parameter vector
    C : (L, K) full-column-rank constraint matrix
    f : (K,) constraint response vector
    R : (L, L) SPD input covariance with trace L
    eta : noise variance >= 0
    lam : forgetting factor in (0, 1)
    mu : relaxation weight >= 0
    input_dist : "gaussian" or "uniform"
    """

    h: np.ndarray
    C: np.ndarray
    f: np.ndarray
    R: np.ndarray
    eta: float
    lam: float
    mu: float
    input_dist: str = GAUSSIAN
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=float))
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float))
        self.validate()

    @property
    def L(self):
        return self.h.shape[0]

    @property
    def K(self):
        return self.C.shape[1]

    def validate(self):
        L, K = self.L, self.K
        if not (1 < K < L <= MAX_DIM):
            raise InvalidDimensions(f"need 1 < K < L <= {MAX_DIM}, got L={L} K={K}")
        if self.C.shape != (L, K):
            raise InvalidDimensions(f"C has shape {self.C.shape}, expected {(L, K)}")
        if self.f.shape != (K,):
            raise InvalidDimensions(f"f has shape {self.f.shape}, expected {(K,)}")
        if self.R.shape != (L, L):
            raise InvalidDimensions(f"R has shape {self.R.shape}, expected {(L, L)}")
        if not (0.0 < self.lam < 1.0):
            raise ValueError(f"forgetting factor must be in (0, 1), got {self.lam}")
        if self.mu < 0.0:
            raise ValueError(f"weight must be >= 0, got {self.mu}")
        if self.eta < 0.0:
            raise ValueError(f"noise variance must be >= 0, got {self.eta}")
        if self.input_dist not in (GAUSSIAN, UNIFORM):
            raise ValueError(f"unknown input distribution {self.input_dist!r}")
        if abs(np.linalg.norm(self.h) - 1.0) > 1e-12:
            raise ValueError("h must have unit norm")
        if abs(numerics.trace(self.R) - L) > 1e-9:
            raise ValueError("R must have trace L")
        sv = np.linalg.svd(self.C, compute_uv=False)
        if sv[-1] <= 1e-8 * sv[0]:
            raise ValueError("C is (numerically) rank deficient")
        numerics.cholesky_factor(self.R)  # raises NotPositiveDefinite otherwise

    @property
    def lambda_hat(self):
        return 1.0 - self.lam

    def with_params(self, **kwargs):
        """Copy with some of lam/mu/eta/input_dist replaced."""
        return replace(self, **kwargs)


@dataclass(frozen=True)
class DerivedContext:
    """Quantities computed once from a Scenario and reused everywhere.

    g : optimal constrained solution
    e : h - g
    r : C.T h - f
    A : (R + lambda_hat * mu * C C.T)^-1
    B : (I + lambda_hat * mu * C.T R^-1 C)^-1
    G : R^-1 C (C.T R^-1 C)^-1 C.T  (oblique projector, idempotent)
    """

    g: np.ndarray
    e: np.ndarray
    r: np.ndarray
    A: np.ndarray
    B: np.ndarray
    G: np.ndarray
    lambda_hat: float


def generate_scenario(seed, L, K, lam, mu, eta, input_dist=GAUSSIAN,
                      consistent_constraints=False):
    """Draw a valid Scenario deterministically from an integer seed.

    h is standard normal scaled to unit norm; C is standard normal,
    redrawn from fresh substreams until numerically full rank; f is
    standard normal (or C.T h when consistent_constraints is set);
    R = Z Z.T + 0.1 I, trace-normalized to L.
    """
    if not (1 < K < L <= MAX_DIM):
        raise InvalidDimensions(f"need 1 < K < L <= {MAX_DIM}, got L={L} K={K}")
    root = np.random.SeedSequence(entropy=int(seed))
    rng_h, rng_c, rng_f, rng_r = [np.random.default_rng(s) for s in root.spawn(4)]

    h = rng_h.standard_normal(L)
    h /= np.linalg.norm(h)

    C = None
    for _ in range(_RANK_ATTEMPTS):
        cand = rng_c.standard_normal((L, K))
        sv = np.linalg.svd(cand, compute_uv=False)
        if sv[-1] > 1e-8 * sv[0]:
            C = cand
            break
    if C is None:
        raise RankDeficiencyPersists(
            f"no full-rank C in {_RANK_ATTEMPTS} attempts (L={L}, K={K})")

    f = C.T @ h if consistent_constraints else rng_f.standard_normal(K)

    Z = rng_r.standard_normal((L, L))
    R = Z @ Z.T + 0.1 * np.eye(L)
    R *= L / np.trace(R)

    return Scenario(h=h, C=C, f=f, R=R, eta=float(eta), lam=float(lam),
                    mu=float(mu), input_dist=input_dist, seed=int(seed))


def optimal_solution(scenario):
    """Minimizer g of (w-h)' R (w-h) subject to C' w = f."""
    C, f, h = scenario.C, scenario.f, scenario.h
    RinvC = numerics.solve_spd(scenario.R, C)
    correction = RinvC @ numerics.solve_spd(C.T @ RinvC, f - C.T @ h)
    return h + correction


def derive_context(scenario):
    """Compute the DerivedContext for a Scenario."""
    C, R = scenario.C, scenario.R
    lh = scenario.lambda_hat
    g = optimal_solution(scenario)
    e = scenario.h - g
    r = C.T @ scenario.h - scenario.f

    A = numerics.inverse_spd(R + lh * scenario.mu * (C @ C.T))
    RinvC = numerics.solve_spd(R, C)
    K = scenario.K
    B = np.linalg.inv(np.eye(K) + lh * scenario.mu * (C.T @ RinvC))
    G = RinvC @ numerics.solve_spd(C.T @ RinvC, C.T)
    return DerivedContext(g=g, e=e, r=r, A=A, B=B, G=G, lambda_hat=lh)


class DataStream:
    """Sequential generator of (x_n, y_n, v_n) emissions for a Scenario.

    x_n = F z_n with F the Cholesky factor of R and z_n i.i.d. zero-mean
    unit-variance components (standard normal or uniform on
    [-sqrt(3), sqrt(3)]); v_n ~ N(0, eta); y_n = x_n' h + v_n. One stream
    per thread; identical (scenario, seed) pairs emit identical samples.
    """

    def __init__(self, scenario, seed):
        self.scenario = scenario
        if isinstance(seed, np.random.SeedSequence):
            self.seed = seed
        else:
            self.seed = np.random.SeedSequence(entropy=int(seed))
        self._rng = np.random.default_rng(self.seed)
        self._chol = numerics.cholesky_factor(scenario.R)

    def take(self, n):
        """Next n emissions as arrays: X (n, L), y (n,), v (n,)."""
        sc = self.scenario
        if sc.input_dist == GAUSSIAN:
            Z = self._rng.standard_normal((n, sc.L))
        else:
            half_width = np.sqrt(3.0)
            Z = self._rng.uniform(-half_width, half_width, size=(n, sc.L))
        X = Z @ self._chol.T
        v = (np.sqrt(sc.eta) * self._rng.standard_normal(n)
             if sc.eta > 0.0 else np.zeros(n))
        y = X @ sc.h + v
        return X, y, v

    def __iter__(self):
        while True:
            X, y, v = self.take(1)
            yield X[0], float(y[0]), float(v[0])


def data_stream(scenario, seed):
    """Convenience constructor matching the operation-style API."""
    return DataStream(scenario, seed)

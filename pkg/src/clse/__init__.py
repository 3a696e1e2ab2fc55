"""Constrained recursive least-squares estimation toolkit.

Modules:
  numerics   - dense SPD solves, Cholesky, traces, spectral radii
  model      - scenarios, seeded generation, data streams, derived context
  filters    - CLS, rCLS, and DCD-rCLS online estimators
  theory     - closed-form steady-state performance predictions
  montecarlo - seeded ensemble harness and parameter sweeps
  cli        - the `clse` command-line front end
  kernels    - compiled / pure-Python trial-loop backends
"""

from . import filters, kernels, model, montecarlo, numerics, theory

__version__ = "0.1.0"

__all__ = ["filters", "kernels", "model", "montecarlo", "numerics", "theory",
           "__version__"]

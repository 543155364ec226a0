"""Classical and quantum synchronization of two coupled bosonic modes.

Submodules
----------
numerics      ODE integration, tridiagonal eigensolver, polar quadrature
meanfield     classical mean-field dynamics and measure-synchronization diagnostics
focksector    exact dynamics in a fixed total-number sector
fullspace     dynamics in the truncated two-mode space (coherent-state initial data)
husimi        joint and marginal Husimi Q-functions
syncmeasures  Mari measure and mutual-information variants
cli           experiment runner (``becsync`` command)
"""

__version__ = "0.1.0"

from . import numerics, meanfield, focksector, fullspace, husimi, syncmeasures  # noqa: E402,F401

"""Exception types for cosmoweyl.

All domain errors derive from ``ValueError`` so callers (and the CLI) can
catch them with the usual ``(RuntimeError, KeyError, ValueError)`` guard.
Iterative failures derive from ``RuntimeError``.
"""

from __future__ import annotations


class DomainError(ValueError):
    """Point or parameter lies outside the declared domain."""


class HorizonProximityError(DomainError):
    """Evaluation too close to a horizon where the chart degenerates."""


class NoHorizonError(ValueError):
    """Schwarzschild-de Sitter parameters admit no three distinct horizons."""


class PositivityError(ValueError):
    """A quantity that must be positive is not (e.g. the foliation change)."""


class SymmetryError(ValueError):
    """A tensor violates its algebraic symmetries beyond tolerance."""


class FrameError(ValueError):
    """A null frame is not normalized."""


class MissingDerivativeError(ValueError):
    """A derivative evaluator required by a formula was not supplied."""


class DegenerateMetricError(ValueError):
    """A metric that must be positive definite is not."""


class ExpansionSignError(ValueError):
    """Null expansions have the wrong sign for the requested construction."""


class DivergentWeightError(ValueError):
    """An improper weight integral does not converge."""


class HypothesisError(ValueError):
    """Input violates the hypothesis of an inequality being checked."""


class ConfigError(ValueError):
    """Invalid configuration."""


class ConvergenceError(RuntimeError):
    """Root finding or finite-difference refinement failed to converge."""

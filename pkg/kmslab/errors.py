"""
Exception hierarchy shared by every kmslab module.

Validation problems derive from ``ValueError`` and computation failures from
``RuntimeError`` so callers that only know the builtin types still catch them.
The CLI maps each family to an exit code.
"""

from __future__ import annotations


class KmsLabError(Exception):
    """Base class for all kmslab errors."""

    exit_code = 2


class ConfigError(KmsLabError, ValueError):
    exit_code = 1


class GraphError(KmsLabError, ValueError):
    """Malformed graph input or a request that does not fit the graph."""

    exit_code = 1


class ReducibleGraphError(GraphError):
    pass


class UndeterminedError(GraphError):
    """A property that a truncation with a frontier cannot decide."""


class HypothesisError(KmsLabError, ValueError):
    exit_code = 1


class PotentialError(KmsLabError, ValueError):
    exit_code = 1


class ComputationError(KmsLabError, RuntimeError):
    exit_code = 2


class NoLoopsError(ComputationError):
    pass


class InfeasibleBetaError(ComputationError):
    pass


class ConvergenceError(ComputationError):
    pass


class FrontierError(ComputationError):
    pass


class ResidualError(ComputationError):
    """A computed vector misses the eigen-equation by more than the residual tolerance."""


class GoldenMismatchError(ComputationError):
    exit_code = 3

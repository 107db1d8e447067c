"""Exception types shared across the package."""


class DepthselError(Exception):
    """Base class for all package errors."""


class IndexOutOfRange(DepthselError):
    """A layer index falls outside [0, depth)."""


class EmptyNeighborhood(DepthselError):
    """A mask with k=0 or k=N has no cardinality-preserving swaps."""


class DepthMismatch(DepthselError):
    """Two masks (or a mask and an objective) disagree on model depth."""


class BudgetExhausted(DepthselError):
    """An evaluation would exceed the objective's evaluation budget."""


class ItemMalformed(DepthselError):
    """A multiple-choice task item has no incorrect completions."""


class ProtocolError(DepthselError):
    """The external evaluator returned an error or spoke garbage."""


class HandshakeMismatch(ProtocolError):
    """External evaluator announced an unsupported protocol or depth 0."""


class EvaluatorTimeout(ProtocolError):
    """External evaluator did not answer within the configured timeout."""


class SpaceTooLarge(DepthselError):
    """C(N, k) exceeds the configured enumeration cap."""

    def __init__(self, n_subsets: int, cap: int):
        super().__init__(f"subset space has {n_subsets} configurations, cap is {cap}")
        self.n_subsets = n_subsets
        self.cap = cap


class UnknownAlgorithm(DepthselError):
    """Search dispatcher got an algorithm name it does not know."""


class ConfigError(DepthselError):
    """A run configuration is malformed or contains unknown fields."""

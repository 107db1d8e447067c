"""depthsel: cardinality-constrained layer-subset selection toolkit."""

from .masks import Budget, LayerMask, cardinality_neighbors, make_mask, mask_from_key, mask_key

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "LayerMask",
    "cardinality_neighbors",
    "make_mask",
    "mask_from_key",
    "mask_key",
    "__version__",
]

"""Triple patterning layout decomposition with density balancing."""

from .geometry import LayoutError, LayoutSpec, load_layout, parse_layout
from .pipeline import DecomposerOptions, DecompositionResult, decompose

__all__ = ["LayoutError", "LayoutSpec", "load_layout", "parse_layout", "DecomposerOptions",
           "DecompositionResult", "decompose"]
__version__ = "0.1.0"

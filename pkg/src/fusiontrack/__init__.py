"""RGB-thermal feature fusion, diffusion-style refinement and confidence-staged tracking."""

__version__ = "0.1.0"

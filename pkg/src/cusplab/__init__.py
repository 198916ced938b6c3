"""cusplab: cuspidal model metrics, geodesic solvers and comparison geometry near degenerating hyperbolic surfaces."""

__version__ = "0.1.0"

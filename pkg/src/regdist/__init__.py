"""regdist: regularized distance functions with certified derivative bounds."""

__version__ = "0.1.0"

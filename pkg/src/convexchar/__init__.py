"""Index iteration, Morse bookkeeping and closed characteristics on convex hypersurfaces in R^6."""

__version__ = "0.1.0"

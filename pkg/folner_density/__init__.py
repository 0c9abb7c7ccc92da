"""Window-scale Banach density, Δ-sets and embeddability with replayable certificates."""

__version__ = "0.1.0"

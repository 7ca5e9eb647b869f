"""Privacy-preserving hop-by-hop navigation over compressed routing matrices."""

__version__ = "0.1.0"

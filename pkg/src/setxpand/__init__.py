"""Corpus-based term set expansion with multi-context term embeddings."""

__version__ = "0.1.0"

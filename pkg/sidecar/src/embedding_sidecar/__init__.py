"""Sentence-embedding /embed microservice with an offline fallback."""

__version__ = "0.1.0"

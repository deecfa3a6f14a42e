"""One-dimensional random-field Kac chain toolkit."""

__version__ = "0.1.0"

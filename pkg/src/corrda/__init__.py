"""Unsupervised domain adaptation by sample-to-sample correspondence."""

__version__ = "0.1.0"

"""Latent space network mediation analysis."""

__version__ = "0.1.0"

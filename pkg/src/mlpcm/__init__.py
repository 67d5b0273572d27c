"""Surrogate PCM write simulator and three-headed MLP predictor."""

__version__ = "0.1.0"

"""Finite-blocklength tools for the two-way wiretap channel."""

from .channel import Channel, InputDistribution

__version__ = "0.1.0"

__all__ = ["Channel", "InputDistribution", "__version__"]

"""Locally implementable tests for maximally entangled qubit pairs."""

__version__ = "0.1.0"

"""Zeros and zero-free regions of the Ising partition function on bounded-degree graphs."""

__version__ = "0.1.0"

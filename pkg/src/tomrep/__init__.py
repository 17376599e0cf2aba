"""Probability (tomographic) representation of qubit and photon states."""

__version__ = "0.1.0"

"""Entanglement entropy versus particle transport in a Fermi-Hubbard tunneling chain."""

__version__ = "0.1.0"

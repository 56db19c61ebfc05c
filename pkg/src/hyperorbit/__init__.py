"""Variational computation of escaping orbits for repulsive homogeneous potentials."""

__version__ = "0.1.0"

"""Stability of the ball for perimeter-perturbed attractive-repulsive energies."""

__version__ = "0.1.0"

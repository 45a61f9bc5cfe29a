"""Markov chain modeling of longitudinal EDSS disability trajectories."""

__version__ = "0.1.0"

"""Collapse simulation library: stochastic collapse trajectories, collapse master equations and interference checks"""

__version__ = "0.1.0"

"""Modular learning-based indirect adaptive control of a two-link manipulator.

A robust feedback-linearizing controller keeps the tracking error bounded by
the error in the estimated uncertainty; extremum seeking or GP-UCB tune that
estimate from episode costs.
"""

__version__ = "0.1.0"

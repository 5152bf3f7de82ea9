"""Simulation of single-RF massive antenna array front-ends.

The package models the coupled-feed current relation of an arbitrary array,
its parasitic and load-modulated special cases, and the statistical hardware
benefits of a common power amplifier (PAPR, mismatch, clipping distortion).
"""

__version__ = "0.1.0"

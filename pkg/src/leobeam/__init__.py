"""Discrete-epoch LEO beam-management simulator and scheduler."""
__version__ = "0.1.0"

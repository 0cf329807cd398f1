"""Molecular-communication channel simulator and surrogate regressors."""

__version__ = "0.1.0"

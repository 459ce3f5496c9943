"""Discrete-event proof-of-work mining simulator with fee-redistribution contracts."""

__version__ = "0.1.0"

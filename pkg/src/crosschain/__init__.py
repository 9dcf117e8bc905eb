"""Atomic cross-chain function calls over simulated blockchains."""

__version__ = "0.1.0"

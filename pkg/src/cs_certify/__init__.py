"""Verification and construction engine for iterated Cauchy-Schwarz proofs over F_p."""

__version__ = "0.1.0"

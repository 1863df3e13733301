"""Exponential tail bounds for sums of M-acceptable random variables.

Analytic constants for a closed distribution catalog, exact convolution
oracles for small instances, and seeded Monte Carlo checks over negatively
dependent families.
"""

from maccept.errors import DomainError, SizeError, UnsupportedError

__version__ = "0.1.0"

__all__ = ["DomainError", "SizeError", "UnsupportedError", "__version__"]

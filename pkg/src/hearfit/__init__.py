"""Multi-band Bayesian personalization of hearing-aid amplification."""

__version__ = "0.1.0"

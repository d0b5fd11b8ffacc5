"""Two-tier Bayesian and Monte Carlo uncertainty evaluation for one-port VNA S11."""

__version__ = "0.1.0"

"""Observer-assisted hyper-parameter tuning."""

__version__ = "0.1.0"

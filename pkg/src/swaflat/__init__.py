"""swaflat - stochastic weight averaging and flatness diagnostics for small models."""

__version__ = "0.1.0"

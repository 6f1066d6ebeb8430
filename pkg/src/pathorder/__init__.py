"""Path ensembles, entropy generation and stochastic order on paths."""
__version__ = "0.1.0"

"""Dynamic sampled stochastic approximation solvers for stochastic variational inequalities."""

__version__ = "0.3.0"

"""Divergence-regularized multi-marginal optimal transport: solver, certifiers and experiments."""

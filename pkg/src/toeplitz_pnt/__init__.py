"""Toeplitz subshifts, prime/semiprime/polynomial orbit averages and their counterexample builders."""

__version__ = "0.1.0"

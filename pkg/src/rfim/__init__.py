"""Approximate counting and sampling for the random field Ising model on
sparse graphs, via self-avoiding-walk tree recursion with certified
truncation, with exact enumeration oracles, Glauber dynamics, and
disagreement-percolation experiments."""

__version__ = "0.1.0"

"""Weak normalization of the simply-typed lambda-calculus with sums, by
running a realizability argument over the mu/mu-tilde abstract machine."""

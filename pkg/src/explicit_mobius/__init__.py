"""Explicit formulas for Möbius sums twisted by Dirichlet characters and over Abelian fields."""

__version__ = "0.1.0"

"""Exact workbench for (T)/(TE)/(TP)/(TEP)-structures over F-manifolds."""

__version__ = "0.1.0"

"""Verification protocols for Dicke, phased Dicke, W and antisymmetric states."""

__version__ = "0.1.0"

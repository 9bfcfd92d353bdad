"""Exact truncated power series tools for formal CR submanifolds and their mappings."""

__version__ = "0.1.0"

"""Stationary states of NLS on noncompact metric graphs."""

__version__ = "0.1.0"

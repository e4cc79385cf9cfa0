"""Deadline-aware scheduling of cut quantum circuits on an LOCC-only QPU cloud."""

__version__ = "0.1.0"

"""Differential-drag phasing of LEO satellite clusters via daily linear programs."""

__version__ = "0.1.0"

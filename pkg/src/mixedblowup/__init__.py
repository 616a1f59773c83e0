"""Finite-time blow-up certification for reaction equations driven by -a Lap + b (-Lap)^s."""

__version__ = "0.1.0"

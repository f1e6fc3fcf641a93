"""Fully implicit dual-porosity oil-water reservoir simulator."""

__version__ = "0.1.0"

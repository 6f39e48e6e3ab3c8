"""itx: headless engine for physics-based assembly training scenarios."""

__version__ = "0.1.0"

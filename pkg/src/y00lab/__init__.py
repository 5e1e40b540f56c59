"""Y-00 quantum-noise stream cipher laboratory."""

__version__ = "0.1.0"

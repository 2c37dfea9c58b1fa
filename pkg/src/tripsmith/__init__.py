"""Travel-planning agent engine: outline, information collection, plan making."""

__version__ = "0.1.0"

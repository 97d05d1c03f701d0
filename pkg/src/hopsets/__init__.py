"""Linear-size hopsets, their distributed construction, and low-memory compact routing."""

__version__ = "0.1.0"

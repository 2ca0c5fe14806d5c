"""tweet2traffic: next-day morning congestion prediction from multi-source feeds."""

__version__ = "0.1.0"

"""Portal: a daemon that gives physical objects persistent AI personas,
long-term memory, and ritual-structured conversations."""

__version__ = "0.1.0"

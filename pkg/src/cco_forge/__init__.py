"""Executable CCO/BFO design patterns: Turtle I/O, taxonomy checks, templates, units and time."""

__version__ = "0.1.0"

"""Trace-driven simulator and optimization library for joint computing and
cooling energy management in virtualized data centers."""

__version__ = "0.1.0"

"""Checking backward compatibility of updates to W programs."""

__version__ = "0.1.0"

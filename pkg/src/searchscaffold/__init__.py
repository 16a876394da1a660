"""Scaffolded search-as-learning sessions and their analytics."""

__version__ = "0.1.0"

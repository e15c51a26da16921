"""Stance, topic, sentiment and bot analytics for political tweet corpora."""

__version__ = "0.1.0"

"""Adapters from local transformer runtimes to the lyricforge interchange formats."""

__version__ = "0.1.0"

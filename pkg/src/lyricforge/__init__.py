"""lyricforge: detection of machine-generated song lyrics at desk scale."""

__version__ = "0.1.0"

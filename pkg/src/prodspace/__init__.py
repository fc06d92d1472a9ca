"""Product Space analytics from bilateral trade data."""

__version__ = "0.1.0"

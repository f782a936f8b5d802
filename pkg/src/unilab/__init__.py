"""unilab: a numerical laboratory for universal operators."""

__version__ = "0.1.0"

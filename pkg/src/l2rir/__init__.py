"""Joint low-light enhancement and deraining with pairwise degradation guidance."""

__version__ = "0.1.0"

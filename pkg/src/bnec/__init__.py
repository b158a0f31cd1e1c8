"""Block network error control (BNEC) codes for multicast over acyclic networks."""

__version__ = "0.1.0"

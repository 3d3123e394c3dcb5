"""Short-text binary classification engine and benchmarking harness."""

__version__ = "0.1.0"

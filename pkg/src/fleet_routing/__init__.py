"""Fleet size-and-mix, split-delivery vehicle routing toolkit."""

__version__ = "0.1.0"

"""Posted-price mechanisms for one item, Poisson arrivals and discounted valuations."""

__version__ = "0.1.0"

"""Root of the toolkit's exception hierarchy."""


class FleetRoutingError(Exception):
    """Base class for every error raised by the toolkit."""
    pass

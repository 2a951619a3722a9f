"""Exception hierarchy shared across the package."""


class ModelError(Exception):
    """The model is structurally unusable for the requested operation."""


class SingularRoutingError(ModelError):
    """I - P^T is numerically singular: traffic cannot leave the network."""


class UnstableModelError(ModelError):
    """The operation requires total utilization < 1."""


class NumericsError(Exception):
    """A numerical procedure failed (non-finite state, failed consistency check)."""

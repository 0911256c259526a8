"""Exception types shared across the package."""


class ValidationError(ValueError):
    """A model or run configuration violates a structural requirement.

    Raised at construction time, before any sampling happens. ``field`` names
    the offending configuration entry when one is known.
    """

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class RegimeError(ValueError):
    """Tail indices or scaling lie outside the large-deviation regime."""

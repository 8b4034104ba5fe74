"""Base error type for runners."""


class RunError(Exception):
    """An error that ends a run. ``exit_code`` is what the CLI returns."""

    exit_code: int = 1

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

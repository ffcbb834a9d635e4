"""Exception types shared across the package."""


class TreeFdrError(Exception):
    """Base class for all errors raised by treefdr."""


class ValidationError(TreeFdrError):
    """Invalid user input: malformed trees, p-values, levels, or config.

    The CLI maps this to exit code 2; the HTTP service maps it to 400.
    """

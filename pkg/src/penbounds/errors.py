"""Exception hierarchy shared by all modules.

The CLI maps :class:`InputError` to exit code 1 and :class:`LimitError`
/ :class:`UnsupportedError` to exit code 2.
"""


class PenError(Exception):
    """Base class for every error raised by penbounds."""


class InputError(PenError, ValueError):
    """Malformed or invalid input (states, documents, networks)."""


class ConnectivityError(InputError):
    """The network graph is not connected."""


class LimitError(PenError):
    """A configured size limit (enumeration, dimension) was exceeded."""


class UnsupportedError(PenError):
    """The requested computation is not available for this input."""

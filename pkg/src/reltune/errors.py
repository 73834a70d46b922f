"""Exception hierarchy shared by all modules.

``UsageError`` maps to CLI exit status 1, every other ``ReltuneError`` to 2.
"""


class ReltuneError(Exception):
    pass


class UsageError(ReltuneError):
    """Invalid flags or arguments."""


class DataError(ReltuneError):
    """Malformed or inconsistent input data."""


class RuleError(DataError):
    """Invalid analyzer rule file or rule set."""


class DocumentError(DataError):
    """A corpus record was rejected."""


class ConfigError(DataError):
    """Invalid relevance config or parameter space."""


class EmptyQueryError(DataError):
    """A query analyzed to zero tokens, so nothing can be retrieved."""

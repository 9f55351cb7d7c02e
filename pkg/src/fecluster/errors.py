"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NumericalError -> 3.
"""


class DataError(Exception):
    """A corpus file, clustering file, or run directory violates its schema."""


class NumericalError(Exception):
    """A numeric computation failed (non-finite gradient, broken invariant)."""

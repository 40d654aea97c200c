"""Exception types shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, DataError
exits 2, IntegrityError exits 3.
"""


class DataError(ValueError):
    """Malformed or impossible input data (bad file, bad shapes, bad labels)."""


class IntegrityError(RuntimeError):
    """An internal invariant was violated (corrupt table, unmergeable state)."""

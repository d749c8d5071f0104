"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class CorpusMatchError(Exception):
    """Base class for all package errors."""


class ConfigError(CorpusMatchError):
    """Invalid run configuration. Collects every problem, not just the first."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DataError(CorpusMatchError):
    """Malformed, inconsistent, or insufficient input data."""


class NumericError(CorpusMatchError):
    """Numerical failure (divergence, non-finite intermediate)."""

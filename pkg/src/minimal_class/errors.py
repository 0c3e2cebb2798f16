"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
error classes to distinct process exit statuses.
"""


class MinimalClassError(Exception):
    exit_code = 1


class BadInput(MinimalClassError):
    exit_code = 2


class NonFinite(BadInput):
    exit_code = 3


class ConstantColumn(BadInput):
    exit_code = 4

    def __init__(self, column, name=None):
        self.column = column
        label = f"{column}" if name is None else f"{column} ({name!r})"
        super().__init__(f"column {label} has zero variance")


class DimensionMismatch(MinimalClassError):
    exit_code = 5


class SingularGram(MinimalClassError):
    exit_code = 6


class FoldTooSmall(MinimalClassError):
    exit_code = 7


class EmptySupports(MinimalClassError):
    exit_code = 8


class ZeroGammaInState(MinimalClassError):
    exit_code = 9


class NoCandidates(MinimalClassError):
    exit_code = 10


class InvalidConfig(MinimalClassError):
    exit_code = 11


class EmptySize(MinimalClassError):
    exit_code = 12


class BudgetExceeded(MinimalClassError):
    exit_code = 13


class DegenerateFit(MinimalClassError):
    exit_code = 14


class MissingSize(MinimalClassError):
    exit_code = 15

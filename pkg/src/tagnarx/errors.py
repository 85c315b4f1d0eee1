"""Exception types shared across the package."""


class TagNarxError(Exception):
    """Base class for all library errors."""


# --- tree and grammar operations ---


class AddressNotFound(TagNarxError):
    """A Gorn address does not resolve to a node of the tree."""


class LabelMismatch(TagNarxError):
    """Operand labels do not satisfy the operation's label constraint."""


class NotALeaf(TagNarxError):
    """Substitution targeted an internal node."""


class NotInternal(TagNarxError):
    """Adjunction targeted a leaf."""


class NotAnInitialTree(TagNarxError):
    """Substitution was given a non-initial elementary tree."""


class NotAnAuxiliaryTree(TagNarxError):
    """Adjunction was given a non-auxiliary elementary tree."""


class UnknownTreeId(TagNarxError):
    """An elementary-tree id is not present in the grammar."""


class InvalidSite(TagNarxError):
    """A derivation records an adjunction site that cannot be applied."""


class InvalidDerivation(TagNarxError):
    """A derivation tree violates its structural invariants."""


class MalformedYield(TagNarxError):
    """A leaf string is not producible by the expression grammar."""


class ExpressionSyntaxError(TagNarxError):
    """A textual model structure could not be parsed."""


# --- numerical model ---


class SeriesTooShort(TagNarxError):
    """A signal does not cover the lags required by the expression."""


class NonFiniteRegressor(TagNarxError):
    """Regressor entries overflowed or are otherwise non-finite."""


class EmptySeries(TagNarxError):
    """An aggregate was requested over an empty series."""


class Diverged(TagNarxError):
    """Synthetic generation left the admissible amplitude range."""


# --- selection ---


class UnevaluatedIndividual(TagNarxError):
    """Sorting or selection reached an individual without a fitness."""


class InsufficientPopulation(TagNarxError):
    """Fewer evaluated individuals than the requested selection size."""


# --- data handling ---


class MissingColumn(TagNarxError):
    """A named CSV column is absent."""


class NonFiniteSample(TagNarxError):
    """A CSV row holds a non-finite or unparseable sample."""

    def __init__(self, row: int, message: str):
        super().__init__(message)
        self.row = row


class RangeOutOfBounds(TagNarxError):
    """A split range reaches outside the data."""


class SplitOverlap(TagNarxError):
    """Estimation and validation ranges intersect."""


class ConfigError(TagNarxError):
    """A run configuration document is invalid."""

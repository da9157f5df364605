"""Shared exception types.

Every checker in this package is total on well-formed data: broken axioms are
*reported*, not raised.  Exceptions are reserved for data that cannot even be
interrogated (unknown identifiers, mismatched endpoints, missing limits) and
for blown enumeration budgets.
"""


class DescentkitError(Exception):
    """Base class for all errors raised by this package."""


class CapExceeded(DescentkitError):
    """An enumeration or size cap was exceeded; nothing was truncated silently."""


class UnknownObject(DescentkitError):
    """An object identifier is not declared in the category."""


class UnknownArrow(DescentkitError):
    """An arrow identifier is not declared in the category."""


class TargetMismatch(DescentkitError):
    """Two arrows were expected to share a target but do not."""


class RootMismatch(DescentkitError):
    """Two sieves were expected to share a root object but do not."""


class MissingProducts(DescentkitError):
    """A required finite product does not exist in the category."""


class MissingPullback(DescentkitError):
    """A required fibered product does not exist in the category."""


class NotFibered(DescentkitError):
    """The projection functor is not a fibration."""


class InvalidPseudoFunctor(DescentkitError):
    """Pseudo-functor data violates its coherence conditions."""


class NotATorsor(DescentkitError):
    """The supplied action/invariant-arrow data is not a torsor."""


class InvalidDescentObject(DescentkitError):
    """A module descent datum fails linearity, invertibility or the cocycle."""


class NotFaithfullyFlat(DescentkitError):
    """The ring map is not faithfully flat, so descent does not apply."""


class AxiomViolation(DescentkitError):
    """Structure constants fail an algebra axiom."""


class NotPrime(DescentkitError):
    """A prime number was required."""


class UnsupportedDegree(DescentkitError):
    """The requested field extension degree is outside the supported range."""


class ParseError(DescentkitError):
    """The input document is not syntactically valid."""


class SchemaError(DescentkitError):
    """The input document is well-formed but violates the input schema."""

"""Exception types shared across the checkers."""


class DegenlabError(Exception):
    pass


class InputError(DegenlabError, ValueError):
    """Invalid argument (out-of-range parameter, malformed data)."""


class HypothesisViolation(DegenlabError):
    """A lemma/proposition hypothesis does not hold for the given data.

    Distinct from a check failure: the conclusion is not expected to hold.
    """


class StencilError(DegenlabError):
    """A finite-difference stencil touches the singular set or leaves the domain."""


class ResolutionError(DegenlabError):
    """Grid too coarse for the requested check."""


class DomainError(DegenlabError, ValueError):
    """Evaluation outside the domain of definition."""


class SingularityError(DomainError):
    """Evaluation exactly on the singular set."""


class DegenerateInputError(DegenlabError):
    """The check does not apply (e.g. the dip function is identically zero)."""

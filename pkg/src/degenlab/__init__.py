"""degenlab: desk-scale numerical checks for degenerate elliptic phenomena.

Partial eigenvalue sums and extremal operators on small symmetric matrices,
scalar fields with the relevant closed-form examples, residual identities for
the counterexample operators, superaffine-condition and barrier checks, convex
envelopes with the discrete ABP inequality, distance-function Hessian
expansions, and a moving-plane symmetry harness.
"""

from . import (distfield, envelope, fields, movingplane, operators, report,
               superaffine, symmat)

__version__ = "0.1.0"

__all__ = ["symmat", "fields", "operators", "superaffine", "envelope",
           "distfield", "movingplane", "report", "__version__"]

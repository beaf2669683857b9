"""Differential-operator evaluation and the explicit residual identities.

Three families of degenerate-elliptic counterexample operators annihilate the
power law |x|^alpha exactly; a weighted extremal operator takes a constant
value on the two-branch radial profile; and the conformal Hessian has two
algebraically identical forms.  Each evaluator returns the raw residual so
tests can pin the identity at a tolerance.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, InputError, SingularityError
from .fields import ScalarField, pow_alpha, pucci_radial_profile, pucci_radial_root
from .symmat import SymMat, as_symmat, partial_sum, pucci_plus, weighted_partial_sum


def eval_k_sum(f: ScalarField, x, k: int, weights=None, h: float | None = None) -> float:
    """Partial (or weighted) sum of the smallest Hessian eigenvalues of f at x.

    Uses the analytic Hessian when the field carries one, finite differences
    otherwise.
    """
    hess = f.hessian(np.asarray(x, dtype=float), h)
    if weights is None:
        return partial_sum(hess, k)
    return weighted_partial_sum(hess, weights)


def example1_residual(x, n: int, l: int, use_fd: bool = False) -> float:
    """Laplacian-plus-gradient-power operator on |x|^alpha, alpha=(2l-2)/(2l-1).

    F = -Lap(u) + (n + alpha - 2) alpha^{1/(alpha-1)} |grad u|^{2l}; vanishes
    identically on the punctured ball.
    """
    if l < 2:
        raise InputError("need l >= 2")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != n:
        raise InputError("point dimension mismatch")
    if np.linalg.norm(x) == 0:
        raise SingularityError("origin")
    alpha = (2.0 * l - 2.0) / (2.0 * l - 1.0)
    u = pow_alpha(alpha, n)
    if use_fd:
        from .fields import fd_gradient, fd_hessian
        g = fd_gradient(u, x)
        lap = np.trace(fd_hessian(u, x).full())
    else:
        g = u.gradient(x)
        lap = np.trace(u.hessian(x).full())
    coeff = (n + alpha - 2.0) * alpha ** (1.0 / (alpha - 1.0))
    return float(-lap + coeff * np.linalg.norm(g) ** (2 * l))


def example2_coefficients(x, alpha: float, eps: float | None = None) -> np.ndarray:
    """Rank-one-deficient-looking rotation coefficients a_ij = I - b b^T in 2d.

    b is the unit tangent scaled by 1 - eps with eps = 1 - sqrt(alpha); the
    optional override lets tests plug a wrong eps and watch the identity die.
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0:
        raise SingularityError("origin")
    if eps is None:
        eps = 1.0 - np.sqrt(alpha)
    b = (1.0 - eps) * np.array([-x[1], x[0]]) / r
    return np.eye(2) - np.outer(b, b)


def example2_residual(x, alpha: float, eps: float | None = None,
                      use_fd: bool = False) -> float:
    """-a_ij(x) d_ij u for u = |x|^alpha in the plane; zero when (1-eps)^2 = alpha."""
    if not (0 < alpha < 1):
        raise InputError("alpha must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    if x.size != 2:
        raise InputError("plane example needs n = 2")
    a = example2_coefficients(x, alpha, eps)
    u = pow_alpha(alpha, 2)
    if use_fd:
        from .fields import fd_hessian
        hess = fd_hessian(u, x).full()
    else:
        hess = u.hessian(x).full()
    return float(-(a * hess).sum())


def householder_to_e1(xhat: np.ndarray) -> np.ndarray:
    """Orthogonal O with O xhat = e1, built as a Householder reflection."""
    n = xhat.size
    e1 = np.zeros(n)
    e1[0] = 1.0
    v = xhat - e1
    nv = np.linalg.norm(v)
    if nv < 1e-14:
        return np.eye(n)
    v = v / nv
    return np.eye(n) - 2.0 * np.outer(v, v)


def example3_coefficients(x, alpha: float, n: int) -> np.ndarray:
    """Rotated anisotropic coefficients a = O^T diag(1, eps, ..., eps) O.

    O maps x/|x| to e1 (deterministic Householder); eps = (1-alpha)/(n-1).
    """
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0:
        raise SingularityError("origin")
    eps = (1.0 - alpha) / (n - 1)
    o = householder_to_e1(x / r)
    ahat = np.diag(np.concatenate([[1.0], eps * np.ones(n - 1)]))
    return o.T @ ahat @ o


def example3_residual(x, n: int, alpha: float, use_fd: bool = False) -> float:
    """-a_ij(x) d_ij u for u = |x|^alpha; zero since 1 + (n-1) eps = 2 - alpha."""
    if n < 2:
        raise InputError("need n >= 2")
    if not (0 < alpha < 1):
        raise InputError("alpha must lie in (0, 1)")
    x = np.asarray(x, dtype=float)
    if x.size != n:
        raise InputError("point dimension mismatch")
    a = example3_coefficients(x, alpha, n)
    u = pow_alpha(alpha, n)
    if use_fd:
        from .fields import fd_hessian
        hess = fd_hessian(u, x).full()
    else:
        hess = u.hessian(x).full()
    return float(-(a * hess).sum())


def pucci_example_residual(n: int, alpha: float, r: float) -> float:
    """Deviation of the weighted extremal operator from its constant value.

    On both branches of the radial profile the operator equals
    -(n-1) alpha (2-alpha) / (1-alpha); returns the evaluated difference.
    """
    if n < 2:
        raise InputError("need n >= 2")
    if not (0 < alpha < 1):
        raise InputError("alpha must lie in (0, 1)")
    rbar = pucci_radial_root(n, alpha)
    if not (0 < r < rbar):
        raise InputError(f"radius outside (0, {rbar})")
    prof = pucci_radial_profile(n, alpha)
    lam = np.concatenate([[prof.d2(r)], np.full(n - 1, prof.d1(r) / r)])
    m = SymMat.from_full(np.diag(lam))
    target = -(n - 1) * alpha * (2 - alpha) / (1 - alpha)
    return float(pucci_plus(m, alpha) - target)


def conformal_hessian(w: ScalarField, x, form: str = "A_w",
                      h: float | None = None) -> SymMat:
    """Conformal Hessian of a positive field.

    form='A_w':  w Hess(w) - |grad w|^2 / 2 * I
    form='A_u':  the u-variable form with exponents in n/(n-2); requires
                 w > 0 at x and n >= 3.
    """
    x = np.asarray(x, dtype=float)
    n = w.dim
    val = w.eval(x)
    g = w.gradient(x, h)
    hess = w.hessian(x, h).full()
    if form == "A_w":
        return SymMat.from_full(val * hess - 0.5 * (g @ g) * np.eye(n))
    if form == "A_u":
        if n < 3:
            raise InputError("A_u form needs n >= 3")
        if val <= 0:
            raise DomainError("A_u form needs a positive field")
        q = (n + 2.0) / (n - 2.0)
        p = 2.0 * n / (n - 2.0)
        m = (-2.0 / (n - 2.0)) * val ** (-q) * hess \
            + (2.0 * n / (n - 2.0) ** 2) * val ** (-p) * np.outer(g, g) \
            - (2.0 / (n - 2.0) ** 2) * val ** (-p) * (g @ g) * np.eye(n)
        return SymMat.from_full(m)
    raise InputError("form must be 'A_w' or 'A_u'")


def coefficient_eigen_range(a: np.ndarray) -> tuple:
    """(min, max) eigenvalue of a coefficient matrix; ellipticity witness."""
    lam = np.linalg.eigvalsh(as_symmat(a).full())
    return float(lam[0]), float(lam[-1])

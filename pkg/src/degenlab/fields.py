"""Scalar fields, radial profiles, grids and the built-in example functions.

Fields carry optional analytic gradients/Hessians; finite differences fill
the gaps.  The builtin registry collects every closed-form function the
checks exercise: power laws, the two-branch radial profile solving the
extremal equation, 1d step/tent/sine examples, split power-quadratic fields,
coordinate maxima and logarithmic barriers.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field as dfield

import numpy as np

from .errors import DomainError, InputError, SingularityError, StencilError
from .symmat import SymMat, as_symmat


@dataclass
class ScalarField:
    """Point-to-value map with optional analytic derivatives.

    ``eval``/``grad``/``hess`` take a length-``dim`` point.  ``singular_set``
    (a distfield.ManifoldSpec) marks where evaluation is undefined.
    """

    dim: int
    eval: callable
    grad: callable | None = None
    hess: callable | None = None
    singular_set: object | None = None
    domain_radius: float | None = None
    name: str = ""

    def __call__(self, x):
        return self.eval(np.asarray(x, dtype=float))

    def gradient(self, x, h: float | None = None):
        x = np.asarray(x, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(x), dtype=float)
        return fd_gradient(self, x, h)

    def hessian(self, x, h: float | None = None):
        x = np.asarray(x, dtype=float)
        if self.hess is not None:
            return as_symmat(self.hess(x))
        return fd_hessian(self, x, h)


@dataclass
class RadialProfile:
    """Radial function r -> value with first and second derivatives.

    ``breakpoints`` lists radii where the pieces join; derivative queries at a
    breakpoint evaluate one-sided and are flagged by the caller.
    """

    value: callable
    d1: callable
    d2: callable
    breakpoints: list = dfield(default_factory=list)
    name: str = ""

    def to_field(self, n: int) -> ScalarField:
        """Lift to |x| |-> value(|x|) in dimension n with analytic derivatives."""

        def ev(x):
            return self.value(float(np.linalg.norm(x)))

        def gr(x):
            r = float(np.linalg.norm(x))
            if r == 0.0:
                raise SingularityError("gradient at the origin")
            return self.d1(r) * x / r

        def he(x):
            r = float(np.linalg.norm(x))
            if r == 0.0:
                raise SingularityError("hessian at the origin")
            xh = x / r
            p = np.outer(xh, xh)
            return self.d2(r) * p + (self.d1(r) / r) * (np.eye(len(x)) - p)

        from .distfield import PointSet

        return ScalarField(n, ev, gr, he, singular_set=PointSet(np.zeros((1, n))),
                           name=self.name or "radial")


@dataclass
class Grid:
    """Uniform rectangular lattice with a punctured-domain mask.

    ``extents[i]`` is the node count along axis i; node coordinates are
    ``origin + h * index``.  The mask flags nodes inside the domain and away
    from the singular set; it is stored (rather than nodes deleted) so
    reflection operators stay index-aligned.
    """

    dim: int
    origin: np.ndarray
    h: float
    extents: tuple
    mask: np.ndarray

    @staticmethod
    def on_box(lo, hi, h, domain_radius=None, singular_set=None, exclusion=None):
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if h <= 0:
            raise InputError("spacing must be positive")
        dim = lo.size
        extents = tuple(int(np.floor((hi[i] - lo[i]) / h + 1e-9)) + 1 for i in range(dim))
        g = Grid(dim, lo, float(h), extents, np.ones(extents, dtype=bool))
        g._apply_mask(domain_radius, singular_set, exclusion)
        return g

    @staticmethod
    def on_ball(radius, h, dim, singular_set=None, exclusion=None):
        lo = -radius * np.ones(dim)
        hi = radius * np.ones(dim)
        return Grid.on_box(lo, hi, h, domain_radius=radius,
                           singular_set=singular_set, exclusion=exclusion)

    def _apply_mask(self, domain_radius, singular_set, exclusion):
        pts = self.nodes()
        mask = np.ones(pts.shape[0], dtype=bool)
        if domain_radius is not None:
            mask &= np.linalg.norm(pts, axis=1) < domain_radius - 1e-12
        if singular_set is not None:
            excl = 3 * self.h if exclusion is None else exclusion
            d = singular_set.dist_many(pts)
            mask &= d > excl
        self.mask = mask.reshape(self.extents)

    def nodes(self) -> np.ndarray:
        axes = [self.origin[i] + self.h * np.arange(self.extents[i]) for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def node(self, idx) -> np.ndarray:
        return self.origin + self.h * np.asarray(idx, dtype=float)

    def describe(self) -> dict:
        return {"h": self.h, "extents": list(self.extents)}


# finite differences ---------------------------------------------------------

def default_h1(x) -> float:
    return max(1e-5, 1e-4 * float(np.linalg.norm(x)))


def default_h2(x) -> float:
    return max(1e-4, 1e-3 * float(np.linalg.norm(x)))


def _safe_eval(f: ScalarField, x):
    v = f.eval(x)
    if not np.isfinite(v):
        raise StencilError(f"non-finite value at {x.tolist()}")
    return v


def _check_stencil(f: ScalarField, x, h):
    if f.singular_set is not None:
        if f.singular_set.dist(x) <= 2.0 * h:
            raise StencilError("stencil touches the singular set")
    if f.domain_radius is not None:
        if np.linalg.norm(x) + 2.0 * h >= f.domain_radius:
            raise StencilError("stencil leaves the domain")


def fd_gradient(f: ScalarField, x, h: float | None = None) -> np.ndarray:
    """Central-difference gradient, O(h^2)."""
    x = np.asarray(x, dtype=float)
    h = default_h1(x) if h is None else float(h)
    _check_stencil(f, x, h)
    g = np.zeros(f.dim)
    for i in range(f.dim):
        e = np.zeros(f.dim)
        e[i] = h
        g[i] = (_safe_eval(f, x + e) - _safe_eval(f, x - e)) / (2 * h)
    return g


def fd_hessian(f: ScalarField, x, h: float | None = None) -> SymMat:
    """Central second differences; mixed terms by the 4-point stencil."""
    x = np.asarray(x, dtype=float)
    h = default_h2(x) if h is None else float(h)
    _check_stencil(f, x, h)
    n = f.dim
    m = np.zeros((n, n))
    f0 = _safe_eval(f, x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        m[i, i] = (_safe_eval(f, x + ei) - 2 * f0 + _safe_eval(f, x - ei)) / (h * h)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            mij = (_safe_eval(f, x + ei + ej) - _safe_eval(f, x + ei - ej)
                   - _safe_eval(f, x - ei + ej) + _safe_eval(f, x - ei - ej)) / (4 * h * h)
            m[i, j] = m[j, i] = mij
    return SymMat.from_full(0.5 * (m + m.T))


def radial_hessian_eigs(p: RadialProfile, r: float, n: int, side: str = "auto"):
    """Hessian eigenvalues of the radial lift: {d2(r)} + {d1(r)/r} x (n-1).

    Returns (eigs ascending, one_sided flag).  At a breakpoint the derivatives
    are evaluated one-sided (side='+' or '-', default '+') and flagged.
    """
    if r <= 0:
        raise InputError("radius must be positive")
    one_sided = any(abs(r - b) < 1e-14 for b in p.breakpoints)
    rr = r
    if one_sided:
        delta = 1e-11 * max(1.0, r)
        rr = r + delta if side in ("auto", "+") else r - delta
    lam = np.concatenate([[p.d2(rr)], np.full(n - 1, p.d1(rr) / rr)])
    return np.sort(lam), one_sided


# builtin fields --------------------------------------------------------------

def pow_alpha(alpha: float, n: int = 2) -> ScalarField:
    """|x|^alpha; superaffine-condition counterexample for 0 < alpha < 1."""
    if alpha <= 0:
        raise InputError("alpha must be positive")
    prof = RadialProfile(
        value=lambda r: r ** alpha,
        d1=lambda r: alpha * r ** (alpha - 1),
        d2=lambda r: alpha * (alpha - 1) * r ** (alpha - 2),
        name=f"pow_alpha({alpha})",
    )
    return prof.to_field(n)


def pucci_radial_profile(n: int, alpha: float) -> RadialProfile:
    """Two-branch C^{2,1} radial profile with constant extremal operator value.

    Inner branch r^alpha - (alpha/2) r^2 on (0, 1]; outer branch matches
    value, slope and curvature at r = 1 and decays to a root rbar > 1.
    n = 2 uses the log form of the outer branch.
    """
    if n < 2:
        raise InputError("need n >= 2")
    if not (0 < alpha < 1):
        raise InputError("alpha must lie in (0, 1)")
    a2 = alpha * (2 - alpha)

    if n == 2:
        c2 = 1 - alpha / 2 + a2 / 4

        def vout(r):
            return -(a2 / 2) * (r * r / 2 - np.log(r)) + c2
    else:
        c2 = (2 - alpha) * (n - 2 + alpha) / (2 * (n - 2))

        def vout(r):
            return -(a2 / n) * (r * r / 2 + r ** (2 - n) / (n - 2)) + c2

    def value(r):
        if r <= 1.0:
            return r ** alpha - (alpha / 2) * r * r
        return vout(r)

    def d1(r):
        if r <= 1.0:
            return alpha * r ** (alpha - 1) - alpha * r
        return -(a2 / n) * (1 - r ** -n) * r

    def d2(r):
        if r <= 1.0:
            return -alpha * (1 - alpha) * r ** (alpha - 2) - alpha
        return -(a2 / n) * (1 + (n - 1) * r ** -n)

    return RadialProfile(value=value, d1=d1, d2=d2, breakpoints=[1.0],
                         name=f"pucci_radial(n={n},alpha={alpha})")


def pucci_radial_root(n: int, alpha: float, tol: float = 1e-12) -> float:
    """The root rbar > 1 of the outer branch, by bisection."""
    prof = pucci_radial_profile(n, alpha)
    lo, hi = 1.0, 2.0
    while prof.value(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise InputError("no root found on the outer branch")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if prof.value(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pucci_radial(n: int, alpha: float) -> ScalarField:
    return pucci_radial_profile(n, alpha).to_field(n)


def step_e1() -> ScalarField:
    """4 on (-3, 0), 1 on [0, 3): harmonic on the punctured interval."""

    def ev(x):
        t = float(np.atleast_1d(x)[0])
        if not (-3.0 < t < 3.0):
            raise DomainError("outside (-3, 3)")
        return 4.0 if t < 0 else 1.0

    from .distfield import PointSet

    return ScalarField(1, ev, singular_set=PointSet(np.zeros((1, 1))),
                       domain_radius=3.0, name="step_e1")


def example4_1d() -> ScalarField:
    """1 + x on [-1, 0], 1/2 - x/2 on (0, 1]: positive, linear, asymmetric."""

    def ev(x):
        t = float(np.atleast_1d(x)[0])
        if not (-1.0 <= t <= 1.0):
            raise DomainError("outside [-1, 1]")
        return 1.0 + t if t <= 0 else 0.5 - 0.5 * t

    from .distfield import PointSet

    return ScalarField(1, ev, singular_set=PointSet(np.zeros((1, 1))),
                       domain_radius=1.0, name="example4_1d")


def example5_sin(n: int = 1) -> ScalarField:
    """sin(pi |x|): positive on the punctured unit ball, not monotone."""
    prof = RadialProfile(
        value=lambda r: np.sin(np.pi * r),
        d1=lambda r: np.pi * np.cos(np.pi * r),
        d2=lambda r: -np.pi ** 2 * np.sin(np.pi * r),
        name="example5_sin",
    )
    f = prof.to_field(n)
    f.domain_radius = 1.0
    return f


def appD_pow(a: float, n: int = 2) -> ScalarField:
    """|x|^{1-a}: weighted two-eigenvalue sum vanishes identically."""
    if not (0 < a < 1):
        raise InputError("a must lie in (0, 1)")
    return pow_alpha(1.0 - a, n)


def appD_split(a: float, eps: float, k: int, n: int) -> ScalarField:
    """Split field: power law in the first n-k coordinates plus a small
    quadratic in the last k.

    Writing x = (y, z) with y the first n-k and z the last k coordinates,
    u = |y|^{1-a-eps} + eps^2 |z|^2.  Smooth away from the slice {y = 0};
    eigenvalues split into the power-law radial pair and 2 eps^2 repeated k
    times.
    """
    if not (0 < a < 1) or not (0 < eps < 1 - a):
        raise InputError("need 0 < a < 1 and 0 < eps < 1 - a")
    if not (1 <= k <= n - 2):
        raise InputError("need 1 <= k <= n - 2")
    p = 1.0 - a - eps
    m = n - k

    def split(x):
        return x[:m], x[m:]

    def ev(x):
        y, z = split(x)
        return float(np.linalg.norm(y) ** p + eps * eps * (z @ z))

    def gr(x):
        y, z = split(x)
        ry = np.linalg.norm(y)
        if ry == 0:
            raise SingularityError("gradient on the singular slice")
        g = np.empty(n)
        g[:m] = p * ry ** (p - 2) * y
        g[m:] = 2 * eps * eps * z
        return g

    def he(x):
        y, z = split(x)
        ry = np.linalg.norm(y)
        if ry == 0:
            raise SingularityError("hessian on the singular slice")
        yh = y / ry
        pr = np.outer(yh, yh)
        blk = p * ry ** (p - 2) * (np.eye(m) + (p - 2) * pr)
        h = np.zeros((n, n))
        h[:m, :m] = blk
        h[m:, m:] = 2 * eps * eps * np.eye(k)
        return h

    from .distfield import AffineSlice

    basis = np.eye(n)[:, m:]  # the z-slice
    return ScalarField(n, ev, gr, he, singular_set=AffineSlice(np.zeros(n), basis),
                       name=f"appD_split(a={a},eps={eps},k={k},n={n})")


def max_coords(k: int, n: int) -> ScalarField:
    """max(0, x_1, ..., x_k): piecewise linear with a k-cube of slopes at 0."""
    if not (1 <= k <= n):
        raise InputError("need 1 <= k <= n")

    def ev(x):
        return float(max(0.0, *np.asarray(x, dtype=float)[:k]))

    return ScalarField(n, ev, name=f"max_coords({k})")


def log_barrier(n: int = 2) -> ScalarField:
    """-log|x|: superharmonic in dimension 2, positive on the unit ball."""
    prof = RadialProfile(
        value=lambda r: -np.log(r),
        d1=lambda r: -1.0 / r,
        d2=lambda r: 1.0 / (r * r),
        name="log_barrier",
    )
    return prof.to_field(n)


_BUILTINS = {
    "pow_alpha": pow_alpha,
    "pucci_radial": pucci_radial,
    "step_e1": step_e1,
    "example4_1d": example4_1d,
    "example5_sin": example5_sin,
    "appD_pow": appD_pow,
    "appD_split": appD_split,
    "max_coords": max_coords,
    "log_barrier": log_barrier,
}


def builtin(name: str, **params):
    """Look up a builtin field by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise InputError(f"unknown builtin {name!r}; have {sorted(_BUILTINS)}") from None
    return factory(**params)


def builtin_names():
    return sorted(_BUILTINS)


# sampling / export -----------------------------------------------------------

def sample_on_grid(f: ScalarField, grid: Grid, fill: float = 0.0) -> np.ndarray:
    """Evaluate f at every unmasked node; masked nodes get ``fill``."""
    pts = grid.nodes()
    vals = np.full(pts.shape[0], fill, dtype=float)
    flat_mask = grid.mask.ravel()
    for i in np.flatnonzero(flat_mask):
        vals[i] = f.eval(pts[i])
    return vals.reshape(grid.extents)


def dump_csv(path, f: ScalarField, grid: Grid, derivatives: bool = False):
    """CSV dump of a sampled field: x1..xn, value and optionally grad/hess."""
    pts = grid.nodes()
    flat_mask = grid.mask.ravel()
    n = f.dim
    header = [f"x{i + 1}" for i in range(n)] + ["value"]
    if derivatives:
        header += [f"g{i + 1}" for i in range(n)]
        header += [f"h{i + 1}{j + 1}" for i in range(n) for j in range(i, n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in np.flatnonzero(flat_mask):
            x = pts[i]
            row = list(x) + [f.eval(x)]
            if derivatives:
                row += list(f.gradient(x))
                hm = f.hessian(x).full()
                row += [hm[a, b] for a in range(n) for b in range(a, n)]
            w.writerow([repr(float(v)) for v in row])

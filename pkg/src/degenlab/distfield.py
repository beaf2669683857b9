"""Distance functions to smooth closed submanifolds and their Hessian structure.

Closed-form distances for point sets, spheres, circles and affine slices;
sampled+polished distance for parametric curves.  The expansion check sorts
the finite-difference Hessian eigenvalues of G(d(x)) into the three clusters
{0 x k, G''(d), G'(d)/d x (n-k-1)} and measures the deviation against the
allowance d|G''(d)| + |G'(d)|.  The sandwich check fits the smallest constant
C bounding d (or d^{1+alpha}) between the tangent-aligned comparison bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError
from .report import FAIL, INCONCLUSIVE, PASS, CheckReport


class ManifoldSpec:
    """Base: a compact boundaryless submanifold E of R^n with intrinsic dim k."""

    k: int
    ambient: int

    def dist(self, x) -> float:
        raise NotImplementedError

    def nearest(self, x) -> np.ndarray:
        raise NotImplementedError

    def dist_many(self, pts) -> np.ndarray:
        return np.array([self.dist(p) for p in np.asarray(pts, dtype=float)])


@dataclass
class PointSet(ManifoldSpec):
    points: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.k = 0
        self.ambient = self.points.shape[1]

    def dist(self, x):
        return float(np.min(np.linalg.norm(self.points - np.asarray(x, dtype=float), axis=1)))

    def nearest(self, x):
        x = np.asarray(x, dtype=float)
        i = int(np.argmin(np.linalg.norm(self.points - x, axis=1)))
        return self.points[i].copy()

    def dist_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        d = np.linalg.norm(pts[:, None, :] - self.points[None, :, :], axis=2)
        return d.min(axis=1)


@dataclass
class Sphere(ManifoldSpec):
    center: np.ndarray
    radius: float
    ambient_dim: int

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.radius <= 0:
            raise InputError("radius must be positive")
        self.ambient = self.ambient_dim
        self.k = self.ambient - 1

    def dist(self, x):
        return abs(float(np.linalg.norm(np.asarray(x, dtype=float) - self.center)) - self.radius)

    def nearest(self, x):
        x = np.asarray(x, dtype=float)
        v = x - self.center
        r = np.linalg.norm(v)
        if r == 0:
            v = np.zeros(self.ambient)
            v[0] = 1.0
            r = 1.0
        return self.center + self.radius * v / r

    def dist_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.abs(np.linalg.norm(pts - self.center, axis=1) - self.radius)


@dataclass
class CircleInR3(ManifoldSpec):
    """Circle of radius R in the plane spanned by (e1, e2) through ``center``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        if self.center.shape != (3,):
            raise InputError("circle lives in R^3")
        if self.radius <= 0:
            raise InputError("radius must be positive")
        self.ambient = 3
        self.k = 1

    def dist(self, x):
        y = np.asarray(x, dtype=float) - self.center
        rho = np.hypot(y[0], y[1])
        return float(np.hypot(rho - self.radius, y[2]))

    def nearest(self, x):
        y = np.asarray(x, dtype=float) - self.center
        rho = np.hypot(y[0], y[1])
        if rho == 0:
            ang = np.array([1.0, 0.0])
        else:
            ang = y[:2] / rho
        return self.center + np.array([self.radius * ang[0], self.radius * ang[1], 0.0])

    def dist_many(self, pts):
        y = np.asarray(pts, dtype=float) - self.center
        rho = np.hypot(y[:, 0], y[:, 1])
        return np.hypot(rho - self.radius, y[:, 2])

    def tangent_frame_at(self, point):
        """(normal basis, tangent basis) at a point on the circle."""
        y = np.asarray(point, dtype=float) - self.center
        rho = np.hypot(y[0], y[1])
        radial = np.array([y[0] / rho, y[1] / rho, 0.0])
        tangent = np.array([-y[1] / rho, y[0] / rho, 0.0])
        normal2 = np.array([0.0, 0.0, 1.0])
        return np.stack([radial, normal2], axis=1), tangent[:, None]


@dataclass
class AffineSlice(ManifoldSpec):
    """Affine subspace through ``point0`` spanned by the orthonormal ``basis``.

    Used for local-coordinate and sandwich checks; compactness is delegated to
    the bounded patch the caller samples.
    """

    point0: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        self.point0 = np.asarray(self.point0, dtype=float)
        b = np.atleast_2d(np.asarray(self.basis, dtype=float))
        if b.shape[0] != self.point0.shape[0]:
            b = b.T
        q, _ = np.linalg.qr(b)
        self.basis = q
        self.ambient = self.point0.shape[0]
        self.k = self.basis.shape[1]

    def dist(self, x):
        y = np.asarray(x, dtype=float) - self.point0
        proj = self.basis @ (self.basis.T @ y)
        return float(np.linalg.norm(y - proj))

    def nearest(self, x):
        y = np.asarray(x, dtype=float) - self.point0
        return self.point0 + self.basis @ (self.basis.T @ y)

    def dist_many(self, pts):
        y = np.asarray(pts, dtype=float) - self.point0
        proj = (y @ self.basis) @ self.basis.T
        return np.linalg.norm(y - proj, axis=1)

    def tangent_frame_at(self, point):
        n, k = self.ambient, self.k
        proj = np.eye(n) - self.basis @ self.basis.T
        u, s, _ = np.linalg.svd(proj)
        normals = u[:, : n - k]
        return normals, self.basis


@dataclass
class ParametricCurve(ManifoldSpec):
    """Closed curve t in [0, 1) -> R^n given by a callable.

    Distance via 2048 arc samples followed by Newton polish on the squared
    distance; near-ties (medial axis) are flagged through ``last_tie``.
    """

    curve: callable
    ambient_dim: int
    samples: int = 2048
    closed: bool = True

    def __post_init__(self):
        self.ambient = self.ambient_dim
        self.k = 1
        self._ts = np.linspace(0.0, 1.0, self.samples, endpoint=False)
        self._pts = np.array([self.curve(t) for t in self._ts])
        self.last_tie = False

    def _polish(self, x, t0):
        t = t0
        dt = 1e-5
        for _ in range(5):
            g = self.curve
            p, pp, pm = g(t % 1.0), g((t + dt) % 1.0), g((t - dt) % 1.0)
            d1 = ((pp - pm) / (2 * dt)) @ (p - x)
            d2 = ((pp - 2 * p + pm) / (dt * dt)) @ (p - x) + np.linalg.norm((pp - pm) / (2 * dt)) ** 2
            if d2 <= 0:
                break
            t -= d1 / d2
        return t % 1.0

    def dist(self, x):
        x = np.asarray(x, dtype=float)
        d2 = np.linalg.norm(self._pts - x, axis=1)
        i = int(np.argmin(d2))
        best = d2[i]
        # tie flag: another near-minimum far away in parameter
        close = np.flatnonzero(d2 < best * 1.02 + 1e-12)
        gap = np.abs((self._ts[close] - self._ts[i] + 0.5) % 1.0 - 0.5)
        self.last_tie = bool(np.any(gap > 16.0 / self.samples))
        t = self._polish(x, self._ts[i])
        return float(np.linalg.norm(self.curve(t) - x))

    def nearest(self, x):
        x = np.asarray(x, dtype=float)
        i = int(np.argmin(np.linalg.norm(self._pts - x, axis=1)))
        t = self._polish(x, self._ts[i])
        return np.asarray(self.curve(t), dtype=float)


def dist(e: ManifoldSpec, x) -> float:
    return e.dist(x)


def nearest_point(e: ManifoldSpec, x) -> np.ndarray:
    return e.nearest(x)


# Hessian expansion -----------------------------------------------------------

def _fd_hessian_of(fn, x, h):
    n = x.size
    m = np.zeros((n, n))
    f0 = fn(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h
        m[i, i] = (fn(x + ei) - 2 * f0 + fn(x - ei)) / (h * h)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h
            m[i, j] = m[j, i] = (fn(x + ei + ej) - fn(x + ei - ej)
                                 - fn(x - ei + ej) + fn(x - ei - ej)) / (4 * h * h)
    return 0.5 * (m + m.T)


def hessian_expansion_check(e: ManifoldSpec, g_value, g_d1, g_d2, points,
                            tol_factor: float = 5.0,
                            ambiguity: float = 0.1) -> CheckReport:
    """Match FD Hessian eigenvalues of G(d(x)) to the predicted clusters.

    Clusters: value 0 with multiplicity k, G''(d) once, G'(d)/d with
    multiplicity n-k-1.  Every deviation must stay below
    tol_factor * (d |G''(d)| + |G'(d)|).  Reports the empirical factor needed.
    Ambiguous cluster matching (overlapping clusters closer than
    ``ambiguity`` times the cluster gap to an eigenvalue) is inconclusive.
    """
    n, k = e.ambient, e.k
    worst = 0.0
    needed = 0.0
    witness = None
    ambiguous = 0
    used = 0
    for x in np.asarray(points, dtype=float):
        d = e.dist(x)
        if d <= 0:
            raise DomainError("point on the manifold")
        if getattr(e, "last_tie", False):
            continue
        used += 1
        # h ~ d^{3/2} keeps the truncation-to-allowance ratio flat as d -> 0
        h = min(d / 20.0, 0.15 * d ** 1.5, 0.02)
        hess = _fd_hessian_of(lambda y: g_value(e.dist(y)), x, h)
        lam = np.sort(np.linalg.eigvalsh(hess))
        targets = np.sort(np.concatenate([
            np.zeros(k), [g_d2(d)], np.full(n - k - 1, g_d1(d) / d)]))
        allowance = d * abs(g_d2(d)) + abs(g_d1(d))
        # distinct cluster values; nearest-cluster assignment per eigenvalue
        distinct = [targets[0]]
        for t in targets[1:]:
            if abs(t - distinct[-1]) > 1e-9 * (1 + abs(t)):
                distinct.append(t)
        distinct = np.array(distinct)
        if distinct.size > 1:
            gap = np.diff(distinct).min()
            dists = np.abs(lam[:, None] - distinct[None, :])
            two = np.sort(dists, axis=1)
            if np.any(two[:, 1] - two[:, 0] < ambiguity * gap):
                ambiguous += 1
                continue
        dev = np.abs(lam - targets)  # sorted matching, multiplicity-aware
        rel = dev.max() / allowance if allowance > 0 else dev.max()
        needed = max(needed, rel)
        if dev.max() - tol_factor * allowance > worst:
            worst = dev.max() - tol_factor * allowance
            witness = x.tolist()
    status = PASS if needed <= tol_factor else FAIL
    if ambiguous or used == 0:
        status = INCONCLUSIVE
    return CheckReport(
        check="distfield.hessian_expansion",
        status=status,
        params={"k": k, "n": n, "tol_factor": tol_factor},
        worst_violation=float(max(0.0, worst)),
        witness=witness,
        tolerances={"tol_factor": tol_factor, "ambiguity": ambiguity},
        data={"needed_factor": float(needed), "ambiguous_points": ambiguous,
              "points_used": used},
    )


def expansion_stability(e: ManifoldSpec, g_value, g_d1, g_d2, base_points,
                        halvings: int = 2, slack: float = 0.10) -> CheckReport:
    """Needed tolerance factor must not grow as the tube radius halves.

    ``base_points`` lie at distance ~d0 from E; the same offsets are shrunk
    toward the foot points by factors 1/2 and 1/4.
    """
    pts = np.asarray(base_points, dtype=float)
    factors = []
    floor = 1e-6  # below this the factor is roundoff, not structure
    for level in range(halvings + 1):
        scaled = []
        for x in pts:
            foot = e.nearest(x)
            scaled.append(foot + (x - foot) * (0.5 ** level))
        rep = hessian_expansion_check(e, g_value, g_d1, g_d2, np.array(scaled))
        if rep.status == INCONCLUSIVE:
            return rep
        factors.append(rep.data["needed_factor"])
    ok = all(max(factors[i + 1], floor) <= max(factors[i], floor) * (1 + slack)
             for i in range(len(factors) - 1))
    return CheckReport(
        check="distfield.expansion_stability",
        status=PASS if ok else FAIL,
        params={"halvings": halvings},
        worst_violation=float(max(0.0, max(factors[i + 1] - factors[i] for i in range(len(factors) - 1)))),
        tolerances={"slack": slack},
        data={"needed_factors": factors},
    )


def local_coordinates_check(e: ManifoldSpec, x, tol: float = 1e-10) -> CheckReport:
    """Reconstruct d from explicit normal coordinates where available."""
    x = np.asarray(x, dtype=float)
    if isinstance(e, AffineSlice):
        y = x - e.point0
        phi = y - e.basis @ (e.basis.T @ y)
        recon = float(np.linalg.norm(phi))
    elif isinstance(e, CircleInR3):
        y = x - e.center
        phi1 = np.hypot(y[0], y[1]) - e.radius
        phi2 = y[2]
        recon = float(np.hypot(phi1, phi2))
    elif isinstance(e, PointSet) and e.points.shape[0] == 1:
        recon = float(np.linalg.norm(x - e.points[0]))
    else:
        raise InputError("no explicit normal coordinates for this spec")
    err = abs(recon - e.dist(x))
    return CheckReport(
        check="distfield.local_coordinates",
        status=PASS if err <= tol else FAIL,
        params={"spec": type(e).__name__},
        worst_violation=float(err),
        witness=x.tolist(),
        tolerances={"tol": tol},
    )


def sandwich_check(e: ManifoldSpec, foot, points, alpha: float | None = None,
                   shrink_levels: int = 2, stability_slack: float = 0.25) -> CheckReport:
    """Fit the smallest C bounding the distance between the tangent-aligned
    comparison functions, then require C to stay stable as the tube shrinks.

    Plain variant:    3/4 |x'| - C|x''|^2 <= d(x) <= 5/4 |x'| + C|x''|^2
    Power variant:    3/4 |x'|^{1+a} - C|x''|^2 <= d^{1+a} <= 5/4 |x'|^{1+a} + C|x''|^2

    ``foot`` is the base point on E; x' and x'' are the normal and tangent
    coordinates of x - foot in the frame supplied by the spec.
    """
    if not hasattr(e, "tangent_frame_at"):
        raise InputError("spec provides no tangent frame")
    foot = np.asarray(foot, dtype=float)
    normals, tangents = e.tangent_frame_at(foot)
    pts = np.asarray(points, dtype=float)

    def needed_c(scale):
        c_needed = 0.0
        for x in foot + (pts - foot) * scale:
            y = x - foot
            xn = normals.T @ y
            xt = tangents.T @ y
            an, at = np.linalg.norm(xn), np.linalg.norm(xt)
            d = e.dist(x)
            if alpha is None:
                lhs_gap = 0.75 * an - d          # needs C*at^2 >= lhs_gap
                rhs_gap = d - 1.25 * an          # needs C*at^2 >= rhs_gap
            else:
                dp = d ** (1 + alpha)
                anp = an ** (1 + alpha)
                lhs_gap = 0.75 * anp - dp
                rhs_gap = dp - 1.25 * anp
            if at > 1e-12:
                c_needed = max(c_needed, lhs_gap / at ** 2, rhs_gap / at ** 2)
            elif max(lhs_gap, rhs_gap) > 1e-12:
                return np.inf
        return c_needed

    cs = [needed_c(0.5 ** level) for level in range(shrink_levels + 1)]
    finite = all(np.isfinite(c) for c in cs)
    stable = finite and all(cs[i + 1] <= max(cs[i], 1e-9) * (1 + stability_slack)
                            for i in range(len(cs) - 1))
    return CheckReport(
        check="distfield.sandwich",
        status=PASS if (finite and stable) else FAIL,
        params={"alpha": alpha, "spec": type(e).__name__},
        worst_violation=None if finite else np.inf,
        tolerances={"stability_slack": stability_slack},
        data={"fitted_C": cs},
    )

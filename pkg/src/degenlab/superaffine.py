"""Superaffine-condition checks, barriers and the punctured minimum principle.

The central objects: the punctured-ball minimum comparison (adding any linear
function, the interior infimum must match the boundary minimum), grid tests
for nonpositive partial sums of Hessian eigenvalues (plain and weighted), the
log/loglog barriers with their eigenvalue identities, the minimum principle
with its two hypothesis tiers, and supporting-slope sets at the puncture.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from ._sampling import sphere_min, sphere_points
from .distfield import ManifoldSpec, PointSet
from .errors import DomainError, InputError, ResolutionError
from .fields import Grid, RadialProfile, ScalarField, fd_hessian
from .report import (FAIL, HYPOTHESIS_VIOLATION, PASS, CheckReport)


@dataclass
class PuncturedDomain:
    """A ball (or a tube around a manifold) minus its singular set."""

    radius: float
    center: np.ndarray
    singular_set: ManifoldSpec
    tube: bool = False  # when True the domain is {dist(x, E) < radius}

    @staticmethod
    def punctured_ball(radius: float, dim: int) -> "PuncturedDomain":
        return PuncturedDomain(radius, np.zeros(dim), PointSet(np.zeros((1, dim))))

    def boundary_gap(self, x) -> float:
        """Distance from x to the outer boundary."""
        x = np.asarray(x, dtype=float)
        if self.tube:
            return self.radius - self.singular_set.dist(x)
        return self.radius - float(np.linalg.norm(x - self.center))

    def grid(self, h: float, exclusion: float | None = None) -> Grid:
        if self.tube:
            span = self.radius + getattr(self.singular_set, "radius", 1.0) + 0.5
            g = Grid.on_box(-span * np.ones(len(self.center)),
                            span * np.ones(len(self.center)), h)
            d = self.singular_set.dist_many(g.nodes())
            excl = 3 * h if exclusion is None else exclusion
            g.mask = ((d < self.radius - 1e-12) & (d > excl)).reshape(g.extents)
            return g
        return Grid.on_ball(self.radius, h, len(self.center),
                            singular_set=self.singular_set, exclusion=exclusion)


# condition (superaffine) ------------------------------------------------------

def check_condition_superaffine(u: ScalarField, r_bar: float,
                                v_list=None, v_samples: int = 8,
                                r_samples: int = 5, seed: int = 0,
                                grid_h: float | None = None,
                                tol: float | None = None) -> CheckReport:
    """Interior infimum vs boundary minimum of u + V.x on punctured balls.

    For each tested linear tilt V (always including V = 0) and each radius r,
    compares the grid infimum over the punctured ball B_r with the sampled
    minimum over the sphere |x| = r.  A genuinely superaffine-conditioned
    field keeps the difference nonnegative up to sampling error; a violation
    below -tol flags the field.
    """
    n = u.dim
    if grid_h is None:
        grid_h = r_bar / 256 if n == 1 else r_bar / 128
    rng = np.random.default_rng(seed)
    if v_list is None:
        vs = [np.zeros(n)]
        for _ in range(v_samples):
            d = rng.standard_normal(n)
            d /= np.linalg.norm(d)
            vs.append(d * (0.25 + 1.75 * rng.random()))
    else:
        vs = [np.full(n, v, dtype=float) if np.isscalar(v) else np.asarray(v, dtype=float)
              for v in v_list]
    radii = r_bar * np.geomspace(0.3, 0.95, r_samples)
    if tol is None:
        tol = 1e-5 * max(1.0, r_bar)

    grid = Grid.on_ball(r_bar, grid_h, n, singular_set=u.singular_set
                        if u.singular_set is not None else PointSet(np.zeros((1, n))))
    pts = grid.nodes()
    flat_mask = grid.mask.ravel()
    vals = np.full(pts.shape[0], np.nan)
    for i in np.flatnonzero(flat_mask):
        vals[i] = u.eval(pts[i])
    norms = np.linalg.norm(pts, axis=1)

    worst = np.inf
    witness = None
    rng_ref = np.random.default_rng(seed + 1)
    for r in radii:
        inside = flat_mask & (norms < r - 1e-12)
        if not inside.any():
            raise ResolutionError("no interior nodes; refine the grid")
        bpts = sphere_points(n, r)
        buvals = np.array([u.eval(p) for p in bpts])
        for v in vs:
            tilt = pts @ v
            wvals = vals[inside] + tilt[inside]
            interior_inf = float(np.min(wvals))
            bw = buvals + bpts @ v
            i0 = int(np.argmin(bw))
            bmin, bx = float(bw[i0]), bpts[i0]
            if n > 1:
                # local refinement around the sampled boundary minimum
                step = 2 * np.pi * r / bpts.shape[0] if n == 2 else 4 * r / np.sqrt(bpts.shape[0])
                for _ in range(4):
                    cand = bx + step * rng_ref.standard_normal((48, n))
                    cand = r * cand / np.linalg.norm(cand, axis=1)[:, None]
                    cv = np.array([u.eval(p) + v @ p for p in cand])
                    j = int(np.argmin(cv))
                    if cv[j] < bmin:
                        bmin, bx = float(cv[j]), cand[j]
                    step *= 0.35
            gap = interior_inf - bmin
            if gap < worst:
                worst = gap
                iarg = np.flatnonzero(inside)[int(np.argmin(wvals))]
                witness = [list(map(float, v)), float(r), list(map(float, pts[iarg]))]
    status = PASS if worst >= -tol else FAIL
    return CheckReport(
        check="superaffine.condition",
        status=status,
        params={"r_bar": r_bar, "n": n, "v_count": len(vs), "field": u.name},
        worst_violation=float(min(0.0, worst)),
        witness=witness,
        tolerances={"tol": tol},
        grid=grid.describe(),
        seed=seed,
        data={"worst_gap": float(worst)},
    )


# partial-sum grid tests -------------------------------------------------------

def _stencil_ok(grid: Grid, idx) -> bool:
    """All immediate neighbors (including diagonals) unmasked."""
    rng = []
    for i, e in zip(idx, grid.extents):
        if i == 0 or i == e - 1:
            return False
        rng.append((i - 1, i, i + 1))
    it = np.ndindex(*(3,) * grid.dim)
    for off in it:
        j = tuple(rng[d][off[d]] for d in range(grid.dim))
        if not grid.mask[j]:
            return False
    return True


def _grid_sum_scan(u: ScalarField, grid: Grid, weights, tol0: float,
                   noise_c: float, use_fd: bool):
    """Scan unmasked nodes; return (violations, worst, witness, tol_at_worst).

    The FD tolerance is local: tol(x) = tol0 + noise_c * h^2 * ||H|| / rho^2,
    rho the distance to the singular set, reflecting the fourth-derivative
    growth of the power-law/log fields near their singularity.  Eigenvalues
    are taken over the whole node batch at once.
    """
    analytic = (u.hess is not None) and not use_fd
    pts = grid.nodes()
    flat_mask = grid.mask.ravel()
    sing = u.singular_set
    hessians = []
    tols = []
    keep = []
    for flat_i in np.flatnonzero(flat_mask):
        x = pts[flat_i]
        if analytic:
            hm = u.hess(x)
            hm = hm.full() if hasattr(hm, "full") else np.asarray(hm, dtype=float)
            tols.append(tol0)
        else:
            idx = np.unravel_index(flat_i, grid.extents)
            if not _stencil_ok(grid, idx):
                continue
            hm = fd_hessian(u, x, grid.h).full()
            rho = sing.dist(x) if sing is not None else 1.0
            hnorm = float(np.abs(hm).max())
            tols.append(tol0 + noise_c * grid.h ** 2 * max(1.0, hnorm)
                        / max(rho, grid.h) ** 2)
        hessians.append(hm)
        keep.append(flat_i)
    if not hessians:
        return 0, -np.inf, None, tol0
    lam = np.linalg.eigvalsh(np.asarray(hessians))
    w = np.asarray(weights, dtype=float)
    sums = lam[:, : w.size] @ w
    over = sums - np.asarray(tols)
    violations = int((over > 0).sum())
    iworst = int(np.argmax(over))
    return (violations, float(over[iworst]), pts[keep[iworst]].tolist(),
            float(tols[iworst]))


_PROBE_SCALES = [2.0 ** p for p in range(-3, 4)]


def _touching_probes(u: ScalarField, grid: Grid, idx, neighborhood: int = 3):
    """Probe quadratics touching u from below at a node, discretely.

    Hessians run over sign patterns of diag(+-1) times powers of two;
    gradients come from the one-sided difference box (corners + center).
    Yields the Hessian diagonal of every probe that stays below u on the
    neighborhood with equality at the node.
    """
    n = grid.dim
    h = grid.h
    x0 = grid.node(idx)
    u0 = u.eval(x0)
    # discrete subdifferential box
    lo, hi = np.zeros(n), np.zeros(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        lo[i] = (u0 - u.eval(x0 - e)) / h
        hi[i] = (u.eval(x0 + e) - u0) / h
    grads = [0.5 * (lo + hi)]
    for corner in np.ndindex(*(2,) * n):
        grads.append(np.where(np.array(corner) == 0, lo, hi))
    # neighborhood offsets
    offs = [np.array(o) - neighborhood for o in np.ndindex(*(2 * neighborhood + 1,) * n)]
    zs, uz = [], []
    for o in offs:
        j = tuple(np.array(idx) + o)
        if all(0 <= j[d] < grid.extents[d] for d in range(n)) and grid.mask[j]:
            z = grid.node(j)
            zs.append(z - x0)
            uz.append(u.eval(z))
    zs = np.array(zs)
    uz = np.array(uz)
    slack = 1e-9 * max(1.0, abs(u0))
    for p in grads:
        lin = u0 + zs @ p
        room = uz - lin  # quadratic part must stay below this
        for signs in np.ndindex(*(2,) * n):
            sg = 2.0 * np.array(signs) - 1.0
            for s in _PROBE_SCALES:
                hdiag = s * sg
                quad = 0.5 * (zs ** 2 @ hdiag)
                if np.all(quad <= room + slack):
                    yield hdiag


def check_k_superaffine_grid(u: ScalarField, k: int, domain: PuncturedDomain | None,
                             grid: Grid, tier: str = "smooth",
                             tol0: float | None = None, noise_c: float = 10.0,
                             use_fd: bool = False) -> CheckReport:
    """Nonpositivity of the sum of the k smallest Hessian eigenvalues.

    tier='smooth': test the (analytic or FD) Hessian at every interior node.
    tier='touching': necessary-condition check through a finite dictionary of
    probe quadratics touching u from below (for kinked fields).
    tier='both' runs the two in sequence.
    """
    if not (1 <= k <= u.dim):
        raise InputError("k outside 1..n")
    if tol0 is None:
        tol0 = 1e-8 if (u.hess is not None and not use_fd) else 1e-6
    weights = np.ones(k)
    notes = []
    violations = worst = 0
    witness = None
    tol_rep = tol0
    if tier in ("smooth", "both"):
        violations, worst, witness, tol_rep = _grid_sum_scan(
            u, grid, weights, tol0, noise_c, use_fd)
    if tier in ("touching", "both"):
        notes.append("touching tier is a necessary-condition checker")
        flat_mask = grid.mask.ravel()
        for flat_i in np.flatnonzero(flat_mask):
            idx = np.unravel_index(flat_i, grid.extents)
            if not _stencil_ok(grid, idx):
                continue
            for hdiag in _touching_probes(u, grid, idx):
                s = float(np.sort(hdiag)[:k].sum())
                if s > tol0:
                    violations += 1
                    if s > worst:
                        worst = s
                        witness = grid.node(idx).tolist()
    status = PASS if violations == 0 else FAIL
    return CheckReport(
        check="superaffine.k_superaffine",
        status=status,
        params={"k": k, "tier": tier, "field": u.name},
        worst_violation=float(max(worst, 0.0)),
        witness=witness,
        tolerances={"tol0": tol0, "noise_c": noise_c, "tol_at_worst": tol_rep},
        grid=grid.describe(),
        notes=notes,
        data={"violations": int(violations)},
    )


def check_Ak1a(u: ScalarField, k: int, a: float, domain: PuncturedDomain | None,
               grid: Grid, tol0: float | None = None, noise_c: float = 10.0,
               use_fd: bool = False) -> CheckReport:
    """Weighted test: lambda_1 + ... + lambda_{k+1} + a lambda_{k+2} <= 0."""
    if not (0.0 <= a <= 1.0):
        raise InputError("a must lie in [0, 1]")
    if k + 2 > u.dim:
        raise InputError("need k + 2 <= n")
    if tol0 is None:
        tol0 = 1e-8 if (u.hess is not None and not use_fd) else 1e-6
    weights = np.concatenate([np.ones(k + 1), [a]])
    violations, worst, witness, tol_rep = _grid_sum_scan(
        u, grid, weights, tol0, noise_c, use_fd)
    return CheckReport(
        check="superaffine.Ak1a",
        status=PASS if violations == 0 else FAIL,
        params={"k": k, "a": a, "field": u.name},
        worst_violation=float(max(worst, 0.0)),
        witness=witness,
        tolerances={"tol0": tol0, "noise_c": noise_c, "tol_at_worst": tol_rep},
        grid=grid.describe(),
        data={"violations": int(violations)},
    )


# barriers ---------------------------------------------------------------------

def barrier_h_eps(r: float, eps: float, r_bar: float) -> float:
    """Log barrier 1 - log(r / r_bar) / log(eps / r_bar) on [eps, r_bar]."""
    if not (0 < eps < r_bar):
        raise InputError("need 0 < eps < r_bar")
    if not (eps <= r <= r_bar):
        raise DomainError(f"r outside [{eps}, {r_bar}]")
    return 1.0 - np.log(r / r_bar) / np.log(eps / r_bar)


def barrier_h_eps_d1(r: float, eps: float, r_bar: float) -> float:
    if not (eps <= r <= r_bar):
        raise DomainError(f"r outside [{eps}, {r_bar}]")
    return -1.0 / (r * np.log(eps / r_bar))


def barrier_h_eps_d2(r: float, eps: float, r_bar: float) -> float:
    if not (eps <= r <= r_bar):
        raise DomainError(f"r outside [{eps}, {r_bar}]")
    return 1.0 / (r * r * np.log(eps / r_bar))


def barrier_h_profile(eps: float, r_bar: float) -> RadialProfile:
    return RadialProfile(
        value=lambda r: barrier_h_eps(r, eps, r_bar),
        d1=lambda r: barrier_h_eps_d1(r, eps, r_bar),
        d2=lambda r: barrier_h_eps_d2(r, eps, r_bar),
        name=f"h_eps({eps},{r_bar})",
    )


def barrier_g(s: float, variant: str = "kpos") -> float:
    """g(s) = -ln(s) for the point barrier; -ln(s) + ln(-ln(s)) for k >= 1."""
    if not (0 < s < 1):
        raise DomainError("need 0 < s < 1")
    if variant == "k0":
        return -np.log(s)
    if variant == "kpos":
        return -np.log(s) + np.log(-np.log(s))
    raise InputError("variant must be 'k0' or 'kpos'")


def barrier_g_hat(x, e: ManifoldSpec, r_bar: float, variant: str = "kpos") -> float:
    """Barrier g(d(x)/r_bar); positive close to E."""
    d = e.dist(np.asarray(x, dtype=float))
    if d == 0:
        raise DomainError("on the singular set")
    return barrier_g(d / r_bar, variant)


def barrier_AAB2_check(e: ManifoldSpec, k: int, r_bar: float, grid: Grid | None = None,
                       points=None, dtilde_max: float = 0.05,
                       eps_h: float | None = None,
                       growth_factor: float = 2.0,
                       tol: float = 1e-7) -> CheckReport:
    """Positivity of the (k+2)-sum of eigenvalues of -Hess(barrier) near E.

    k = 0 uses the pure log barrier h_eps, whose two-eigenvalue sum vanishes
    identically (checked as |sum| <= tol).  k >= 1 uses the loglog barrier;
    the sum must be strictly positive on the tube and its shell margins must
    grow like d^{-2} (ln d~)^{-2} within ``growth_factor``.
    """
    n = e.ambient
    if points is None:
        if grid is None:
            raise InputError("need a grid or explicit points")
        pts = grid.nodes()
        d = e.dist_many(pts)
        sel = (d > 4 * grid.h) & (d < dtilde_max * r_bar)
        pts = pts[sel]
        if pts.shape[0] == 0:
            raise ResolutionError("no tube nodes at the requested depth")
    else:
        pts = np.asarray(points, dtype=float)

    if k == 0:
        eps = eps_h if eps_h is not None else 1e-6 * r_bar
        gfun = lambda t: barrier_h_eps(t, eps, r_bar)
    else:
        gfun = lambda t: barrier_g(t / r_bar, "kpos")

    from .distfield import _fd_hessian_of

    margins = []
    scales = []
    ds = []
    worst = np.inf
    witness = None
    for x in pts:
        d = e.dist(x)
        hstep = d / 50.0
        hess = _fd_hessian_of(lambda y: gfun(e.dist(y)), x, hstep)
        lam = np.linalg.eigvalsh(-hess.full() if hasattr(hess, "full") else -hess)
        s = float(np.sort(lam)[: min(k + 2, n)].sum())
        margins.append(s)
        scales.append(float(np.abs(lam).max()))
        ds.append(d)
        if s < worst:
            worst = s
            witness = x.tolist()
    margins = np.array(margins)
    scales = np.array(scales)
    ds = np.array(ds)

    if k == 0:
        # the two-eigenvalue sum vanishes identically; FD noise scales with
        # the eigenvalue size, so the identity is checked relatively
        rel = np.abs(margins) / np.maximum(scales, 1e-30)
        ok = bool(rel.max() <= 0.02)
        status = PASS if ok else FAIL
        data = {"max_rel_sum": float(rel.max()),
                "max_abs_sum": float(np.max(np.abs(margins))),
                "identity": "sum == 0 (relative tol 0.02)"}
    else:
        positive = bool(np.min(margins) > 0)
        # shell ratio against the predicted d^{-2} (ln d/r_bar)^{-2} growth
        med = float(np.median(ds))
        shell_hi = (ds > med) & (ds <= 2 * med)
        shell_lo = (ds > 0.5 * med) & (ds <= med)
        data = {"min_margin": float(np.min(margins)), "smallest_d": float(ds.min())}
        ratio_ok = True
        if shell_hi.sum() >= 3 and shell_lo.sum() >= 3:
            emp_hi = float(np.median(margins[shell_hi]))
            emp_lo = float(np.median(margins[shell_lo]))
            d_hi = float(np.median(ds[shell_hi]))
            d_lo = float(np.median(ds[shell_lo]))
            pred = lambda d: d ** -2 * np.log(d / r_bar) ** -2
            emp_ratio = emp_lo / emp_hi
            pred_ratio = pred(d_lo) / pred(d_hi)
            ratio_ok = pred_ratio / growth_factor <= emp_ratio <= pred_ratio * growth_factor
            data.update({"empirical_shell_ratio": emp_ratio,
                         "predicted_shell_ratio": pred_ratio})
        status = PASS if (positive and ratio_ok) else FAIL
    return CheckReport(
        check="superaffine.barrier_AAB2",
        status=status,
        params={"k": k, "r_bar": r_bar, "n": n, "dtilde_max": dtilde_max},
        worst_violation=float(max(0.0, -worst)) if k else None,
        witness=witness,
        tolerances={"tol": tol, "growth_factor": growth_factor},
        grid=grid.describe() if grid is not None else None,
        data=data,
    )


# minimum principle --------------------------------------------------------------

def _unbounded_below_probe(u: ScalarField, e: ManifoldSpec, seed: int = 0):
    """Ray probe toward E: classify blow-down by decade sampling."""
    rng = np.random.default_rng(seed)
    n = u.dim
    base = e.nearest(rng.standard_normal(n))
    drops = []
    for _ in range(4):
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        vals = []
        for dec in range(2, 8):
            x = base + d * 10.0 ** -dec
            try:
                vals.append(u.eval(x))
            except Exception:
                continue
        if len(vals) >= 3:
            vals = np.array(vals)
            decreasing = bool(np.all(np.diff(vals) < 0))
            big_drop = vals[0] - vals[-1] > 100.0 * (1.0 + abs(vals[0]))
            drops.append(decreasing and big_drop)
    return any(drops)


def minimum_principle_check(u: ScalarField, domain: PuncturedDomain, k: int,
                            grid: Grid, tol0: float | None = None,
                            noise_c: float = 10.0, use_fd: bool = False,
                            seed: int = 0) -> CheckReport:
    """Interior values must not undercut the outer-boundary minimum.

    Hypotheses checked first: (a) u bounded below near the singular set (ray
    probe); (b) the (k+2)-partial sum of Hessian eigenvalues nonpositive at
    interior nodes.  If either fails the report carries status
    'hypothesis_violation' together with the conclusion numbers, since the
    counterexamples are exactly the point of the exercise.  Conclusion:
    interior min >= boundary-shell min - 10 h.
    """
    n = u.dim
    if k + 2 > n:
        raise InputError("need k + 2 <= n")
    if tol0 is None:
        tol0 = 1e-8 if (u.hess is not None and not use_fd) else 1e-6

    unbounded = _unbounded_below_probe(u, domain.singular_set, seed)
    weights = np.ones(k + 2)
    violations, worst_sum, wit_sum, tol_rep = _grid_sum_scan(
        u, grid, weights, tol0, noise_c, use_fd)
    hypothesis_ok = (not unbounded) and violations == 0

    pts = grid.nodes()
    flat_mask = grid.mask.ravel()
    gaps = np.array([domain.boundary_gap(p) for p in pts])
    shell = flat_mask & (gaps < 2.5 * grid.h) & (gaps > 0)
    interior = flat_mask & (gaps >= 2.5 * grid.h)
    if not shell.any() or not interior.any():
        raise ResolutionError("grid cannot resolve the boundary shell")
    vals = np.full(pts.shape[0], np.nan)
    for i in np.flatnonzero(flat_mask):
        vals[i] = u.eval(pts[i])
    boundary_min = float(np.nanmin(vals[shell]))
    interior_min = float(np.nanmin(vals[interior]))
    slack = 10.0 * grid.h
    conclusion_ok = interior_min >= boundary_min - slack

    if not hypothesis_ok:
        status = HYPOTHESIS_VIOLATION
    else:
        status = PASS if conclusion_ok else FAIL
    notes = []
    if unbounded:
        notes.append("blow-down detected near the singular set")
    if violations:
        notes.append(f"{violations} nodes violate the (k+2)-sum hypothesis")
    return CheckReport(
        check="superaffine.minimum_principle",
        status=status,
        params={"k": k, "field": u.name},
        worst_violation=float(max(0.0, boundary_min - slack - interior_min)),
        witness=wit_sum,
        tolerances={"tol0": tol0, "noise_c": noise_c, "slack": slack,
                    "tol_at_worst": tol_rep},
        grid=grid.describe(),
        seed=seed,
        notes=notes,
        data={"interior_min": interior_min, "boundary_min": boundary_min,
              "sum_violations": int(violations), "unbounded_below": bool(unbounded),
              "conclusion_ok": bool(conclusion_ok)},
    )


# supporting slopes ---------------------------------------------------------------

@dataclass
class SlopeSet:
    slopes: list
    radii: list
    omega_desc: str
    hull_dim: int
    rejected: list = dfield(default_factory=list)


def support_slope_set(u: ScalarField, candidate_slopes, radii,
                      tol_fn=None, samples: int = 4096) -> SlopeSet:
    """Retain slopes p with u(x) >= p.x - |x| omega(|x|) on every tested sphere.

    The caller normalizes u so its liminf at the puncture is 0.  omega
    defaults to sqrt(r); the radii must be strictly decreasing.
    """
    radii = [float(r) for r in radii]
    if any(radii[i + 1] >= radii[i] for i in range(len(radii) - 1)):
        raise InputError("radii must be strictly decreasing")
    omega = (lambda r: np.sqrt(r)) if tol_fn is None else tol_fn
    n = u.dim
    kept, rejected = [], []
    for p in candidate_slopes:
        p = np.asarray(p, dtype=float)
        ok = True
        for r in radii:
            m, _ = sphere_min(lambda x: u.eval(x) - p @ x, n, r, count=samples)
            if m < -r * omega(r):
                ok = False
                break
        (kept if ok else rejected).append(p)
    if kept:
        mat = np.array(kept) - kept[0]
        hull_dim = int(np.linalg.matrix_rank(mat, tol=1e-8)) if len(kept) > 1 else 0
    else:
        hull_dim = -1
    return SlopeSet(slopes=kept, radii=radii, omega_desc="sqrt(r)" if tol_fn is None
                    else "user", hull_dim=hull_dim, rejected=rejected)

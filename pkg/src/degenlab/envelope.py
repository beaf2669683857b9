"""Convex envelopes of sampled functions, contact sets and the ABP inequality.

The envelope of a grid sample is computed exactly in 1d (monotone-chain lower
hull) and by iterated directional convexification (axes plus diagonals) in 2d
and 3d.  On top of it: contact detection, discrete Monge-Ampere mass over the
contact set against the dip depth, minimal-norm supporting slopes, the
two-point slope stability bound for quasi-superharmonic functions, and
sphere/ball mean-value monotonicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield
from functools import lru_cache

import numpy as np

from ._sampling import ball_average, sphere_average
from .errors import DegenerateInputError, DegenlabError, InputError
from .fields import Grid, ScalarField, fd_hessian
from .report import DEGENERATE, FAIL, HYPOTHESIS_VIOLATION, PASS, CheckReport

_SWEEP_TOL = 1e-12
_MAX_SWEEPS = 10_000


@dataclass
class SampledFunction:
    """Grid plus per-node values (finite everywhere; extensions pre-filled)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.extents:
            v = v.reshape(self.grid.extents)
        if not np.all(np.isfinite(v)):
            raise InputError("sampled values must be finite")
        self.values = v


@dataclass
class EnvelopeResult:
    gamma: np.ndarray
    contact_mask: np.ndarray
    slopes: dict = dfield(default_factory=dict)
    k_estimate: float = np.nan
    sweeps: int = 0


def _hull_line(vals: np.ndarray, step: float) -> np.ndarray:
    """Exact lower convex hull of (i*step, vals[i]), returned on the lattice."""
    m = vals.size
    if m < 3:
        return vals.copy()
    idx = [0]
    for i in range(1, m):
        # pop while the new point makes the previous vertex concave
        while len(idx) >= 2:
            i0, i1 = idx[-2], idx[-1]
            if (vals[i] - vals[i0]) * (i1 - i0) <= (vals[i1] - vals[i0]) * (i - i0):
                idx.pop()
            else:
                break
        idx.append(i)
    out = np.empty(m)
    for a, b in zip(idx[:-1], idx[1:]):
        t = np.arange(a, b + 1) - a
        out[a : b + 1] = vals[a] + (vals[b] - vals[a]) * t / (b - a)
    return out


def _directions(dim: int):
    if dim == 1:
        return [(1,)]
    if dim == 2:
        return [(1, 0), (0, 1), (1, 1), (1, -1)]
    if dim == 3:
        axes = [(1, 0, 0), (0, 1, 0), (0, 0, 1)]
        face = [(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)]
        space = [(1, 1, 1), (1, 1, -1), (1, -1, 1), (1, -1, -1)]
        return axes + face + space
    raise InputError("envelope implemented for dim <= 3")


@lru_cache(maxsize=64)
def _lines_for(extents: tuple, direction: tuple):
    """Flat-index chains walking the grid along ``direction``."""
    ext = np.array(extents)
    dirv = np.array(direction)
    strides = np.cumprod(np.concatenate([[1], ext[::-1][:-1]]))[::-1]
    lines = []
    idx_all = np.indices(extents).reshape(len(extents), -1).T
    starts = idx_all[~np.all((idx_all - dirv >= 0) & (idx_all - dirv < ext), axis=1)]
    # keep only true chain heads: predecessor out of bounds
    prev = starts - dirv
    outside = np.any((prev < 0) | (prev >= ext), axis=1)
    starts = starts[outside]
    for s in starts:
        chain = []
        p = s.copy()
        while np.all((p >= 0) & (p < ext)):
            chain.append(int(p @ strides))
            p = p + dirv
        if len(chain) >= 2:
            lines.append(np.array(chain))
    return lines


def convex_envelope(f: SampledFunction) -> EnvelopeResult:
    """Largest function below the samples that is convex along grid lines.

    dim=1 is the exact lower hull; dim>=2 sweeps axis and diagonal directions
    until the maximum update drops below 1e-12 (at most 10^4 sweeps), which
    converges to the grid-restricted envelope.
    """
    grid = f.grid
    vals = f.values
    if grid.dim == 1:
        gamma = _hull_line(vals.ravel(), grid.h).reshape(grid.extents)
        res = EnvelopeResult(gamma=gamma, contact_mask=np.abs(gamma - vals) <= 1e-12, sweeps=1)
    else:
        gamma = vals.copy().ravel()
        dirs = _directions(grid.dim)
        steps = [grid.h * np.linalg.norm(d) for d in dirs]
        sweeps = 0
        for sweeps in range(1, _MAX_SWEEPS + 1):
            delta = 0.0
            for d, st in zip(dirs, steps):
                for line in _lines_for(grid.extents, d):
                    old = gamma[line]
                    new = _hull_line(old, st)
                    diff = old - new
                    if diff.size:
                        delta = max(delta, float(diff.max()))
                    gamma[line] = new
            if delta < _SWEEP_TOL:
                break
        gamma = gamma.reshape(grid.extents)
        res = EnvelopeResult(gamma=gamma, contact_mask=np.abs(gamma - vals) <= 1e-12,
                             sweeps=sweeps)
    res.k_estimate = _c11_constant(grid, res.gamma)
    return res


def _c11_constant(grid: Grid, gamma: np.ndarray) -> float:
    """Largest discrete second difference over the sweep directions."""
    worst = 0.0
    g = gamma.ravel()
    for d in _directions(grid.dim):
        st = grid.h * np.linalg.norm(d)
        for line in _lines_for(grid.extents, d):
            if line.size >= 3:
                v = g[line]
                sec = (v[2:] - 2 * v[1:-1] + v[:-2]) / (st * st)
                worst = max(worst, float(sec.max()))
    return 0.5 * worst  # K multiplies |x - xbar|^2 in the quadratic bound


def contact_set(f: SampledFunction, env: EnvelopeResult, tol: float) -> np.ndarray:
    """Nodes where the sample touches its envelope (f - gamma <= tol)."""
    return (f.values - env.gamma) <= tol


def envelope_second_differences(grid: Grid, gamma: np.ndarray) -> float:
    """Most negative directional second difference; convexity certificate."""
    worst = 0.0
    g = gamma.ravel()
    for d in _directions(grid.dim):
        st = grid.h * np.linalg.norm(d)
        for line in _lines_for(grid.extents, d):
            if line.size >= 3:
                v = g[line]
                sec = (v[2:] - 2 * v[1:-1] + v[:-2]) / (st * st)
                worst = min(worst, float(sec.min()))
    return worst


def _gamma_hessian(grid: Grid, gamma: np.ndarray, idx) -> np.ndarray:
    """Central FD Hessian of gamma at an interior node."""
    n = grid.dim
    h = grid.h
    m = np.zeros((n, n))
    def g(off):
        j = tuple(np.array(idx) + np.array(off))
        return gamma[j]
    for i in range(n):
        ei = np.zeros(n, dtype=int)
        ei[i] = 1
        m[i, i] = (g(ei) - 2 * g(np.zeros(n, dtype=int)) + g(-ei)) / (h * h)
        for j in range(i + 1, n):
            ej = np.zeros(n, dtype=int)
            ej[j] = 1
            m[i, j] = m[j, i] = (g(ei + ej) - g(ei - ej) - g(-ei + ej) + g(-ei - ej)) / (4 * h * h)
    return m


def monge_ampere_mass(grid: Grid, env: EnvelopeResult, contact: np.ndarray,
                      skip: np.ndarray | None = None) -> float:
    """Cell-quadrature integral of det(Hess gamma) over the contact set.

    Eigenvalues of the discrete Hessian are clamped at zero from below: at
    ridge kinks the mixed terms produce genuinely negative partners whose
    true Monge-Ampere mass is zero.  Genuine non-convexity is certified
    separately through directional second differences.
    """
    sec_worst = envelope_second_differences(grid, env.gamma)
    scale = max(1.0, float(np.abs(env.gamma).max()))
    if sec_worst < -1e-8 * scale / grid.h:
        raise DegenlabError(f"envelope not convex along grid lines ({sec_worst})")
    total = 0.0
    n = grid.dim
    for idx in np.argwhere(contact):
        if skip is not None and skip[tuple(idx)]:
            continue
        if np.any(idx == 0) or np.any(idx == np.array(grid.extents) - 1):
            continue
        hess = _gamma_hessian(grid, env.gamma, tuple(idx))
        lam = np.linalg.eigvalsh(hess)
        lam = np.maximum(lam, 0.0)
        total += float(np.prod(lam)) * grid.h ** n
    return total


def supporting_slope(f: SampledFunction, env: EnvelopeResult, idx,
                     tol: float | None = None) -> np.ndarray:
    """Minimal-norm discrete subgradient of gamma at a contact node.

    One-sided differences per axis give the subdifferential box; the minimal
    norm selection clamps zero into each interval.  The resulting plane is
    verified to stay below gamma everywhere (within tol).
    """
    idx = tuple(idx)
    if not env.contact_mask[idx] and not np.isclose(f.values[idx], env.gamma[idx], atol=1e-9):
        raise InputError("node is not in the contact set")
    grid = f.grid
    g = env.gamma
    n = grid.dim
    lo = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        e = np.zeros(n, dtype=int)
        e[i] = 1
        jm = tuple(np.array(idx) - e)
        jp = tuple(np.array(idx) + e)
        lo[i] = (g[idx] - g[jm]) / grid.h if idx[i] > 0 else -np.inf
        hi[i] = (g[jp] - g[idx]) / grid.h if idx[i] < grid.extents[i] - 1 else np.inf
    p = np.clip(0.0, lo, hi)
    if tol is None:
        tol = 1e-7 * max(1.0, float(np.abs(g).max()))
    # verify the plane lies below gamma
    pts = grid.nodes()
    x0 = grid.node(idx)
    plane = g[idx] + (pts - x0) @ p
    worst = float((plane - g.ravel()).max())
    if worst > tol:
        # project onto the worst violated constraint a few times
        for _ in range(32):
            i = int(np.argmax(plane - g.ravel()))
            z = pts[i] - x0
            gap = (g[idx] + z @ p) - g.ravel()[i]
            if gap <= tol:
                break
            p = p - z * (gap / (z @ z))
            plane = g[idx] + (pts - x0) @ p
    return p


def build_w_eps(u: ScalarField, v: ScalarField, eps: float, domain_radius: float,
                grid_h: float, singular_set=None) -> SampledFunction:
    """The dip function: min((u - v) - eps, 0) inside the domain, 0 outside,
    on a grid over the extension ball of radius 2 * domain_radius.

    At nodes where (u - v) cannot be evaluated (on the singular set), the
    lower limit is estimated from a small probe ring.
    """
    n = u.dim
    ext = 2.0 * domain_radius
    grid = Grid.on_box(-ext * np.ones(n), ext * np.ones(n), grid_h)
    pts = grid.nodes()
    vals = np.zeros(pts.shape[0])
    inside = np.linalg.norm(pts, axis=1) < domain_radius
    for i in np.flatnonzero(inside):
        x = pts[i]
        try:
            diff = u.eval(x) - v.eval(x)
        except Exception:
            probes = x + grid_h / 2 * np.vstack([np.eye(n), -np.eye(n)])
            diff = min(u.eval(p) - v.eval(p) for p in probes)
        vals[i] = min(diff - eps, 0.0)
    return SampledFunction(grid, vals.reshape(grid.extents))


def abp_check(u: ScalarField, v: ScalarField, eps: float, domain_radius: float,
              grid_h: float, slack: float = 0.10) -> CheckReport:
    """Discrete Alexandrov-Bakelman-Pucci inequality for the dip function.

    Builds w = min((u-v) - eps, 0) extended by zero to the double ball,
    envelopes it, and checks depth^n <= mass * (1 + slack + O(h)), where mass
    is the Monge-Ampere integral over the contact set and depth the discrete
    minimum of w.
    """
    f = build_w_eps(u, v, eps, domain_radius, grid_h)
    depth = float(-f.values.min())
    if depth <= 0.0:
        return CheckReport(
            check="envelope.abp",
            status=DEGENERATE,
            params={"eps": eps, "n": u.dim},
            notes=["w identically zero: eps exceeds the interior dip"],
            tolerances={"slack": slack},
        )
    # boundary-gap hypothesis: the dip must vanish near the domain boundary
    pts = f.grid.nodes()
    ring = (np.linalg.norm(pts, axis=1) > domain_radius - 2.5 * grid_h) \
        & (np.linalg.norm(pts, axis=1) < domain_radius)
    if ring.any() and float(f.values.ravel()[ring].min()) < 0.0:
        return CheckReport(
            check="envelope.abp",
            status=HYPOTHESIS_VIOLATION,
            params={"eps": eps, "n": u.dim},
            notes=["dip reaches the domain boundary: boundary-gap hypothesis fails"],
            tolerances={"slack": slack},
        )
    env = convex_envelope(f)
    contact = contact_set(f, env, tol=1e-7 * max(1.0, depth))
    mass = monge_ampere_mass(f.grid, env, contact)
    lhs = depth ** u.dim
    total_slack = slack + grid_h
    ok = lhs <= mass * (1.0 + total_slack)
    return CheckReport(
        check="envelope.abp",
        status=PASS if ok else FAIL,
        params={"eps": eps, "n": u.dim, "domain_radius": domain_radius},
        worst_violation=float(max(0.0, lhs - mass * (1.0 + total_slack))),
        tolerances={"slack": slack, "h_correction": grid_h},
        grid=f.grid.describe(),
        data={"lhs_depth_pow_n": lhs, "mass": mass, "depth": depth,
              "contact_nodes": int(contact.sum()), "k_estimate": env.k_estimate,
              "sweeps": env.sweeps},
    )


# slope stability -----------------------------------------------------------------

def slope_stability_check(u: ScalarField, c_const: float, pairs, omega,
                          sample_points, tol_support: float = 1e-7,
                          lap_tol: float = 1e-6) -> CheckReport:
    """Two-point supporting-slope stability for a quasi-superharmonic field.

    Each pair is (xbar, p, ybar, q) with the support inequality
    u(z) >= u(x) + p.(z - x) - |z - x| omega(|z - x|) verified discretely at
    the sample points; the FD Laplacian must stay below c_const + tol.  The
    report carries the worst ratio |p - q| / (omega(2|x-y|) + |x-y|).
    """
    zs = np.asarray(sample_points, dtype=float)
    lap_worst = -np.inf
    for z in zs[:: max(1, len(zs) // 50)]:
        try:
            lap = float(np.trace(u.hessian(z).full()))
        except Exception:
            continue
        lap_worst = max(lap_worst, lap)
    if lap_worst > c_const + lap_tol:
        return CheckReport(
            check="envelope.slope_stability",
            status=HYPOTHESIS_VIOLATION,
            params={"C": c_const},
            worst_violation=float(lap_worst - c_const),
            tolerances={"lap_tol": lap_tol},
            notes=["quasi-superharmonic bound fails at a sample point"],
        )
    worst_ratio = 0.0
    for (xbar, p, ybar, q) in pairs:
        xbar = np.asarray(xbar, dtype=float)
        ybar = np.asarray(ybar, dtype=float)
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        for (base, slope) in ((xbar, p), (ybar, q)):
            ub = u.eval(base)
            for z in zs:
                r = np.linalg.norm(z - base)
                if r == 0:
                    continue
                bound = ub + slope @ (z - base) - r * omega(r)
                if u.eval(z) < bound - tol_support:
                    return CheckReport(
                        check="envelope.slope_stability",
                        status=HYPOTHESIS_VIOLATION,
                        params={"C": c_const},
                        worst_violation=float(bound - u.eval(z)),
                        witness=z.tolist(),
                        tolerances={"tol_support": tol_support},
                        notes=["support inequality fails at input"],
                    )
        sep = np.linalg.norm(xbar - ybar)
        denom = omega(2 * sep) + sep
        if denom > 0:
            worst_ratio = max(worst_ratio, float(np.linalg.norm(p - q) / denom))
    return CheckReport(
        check="envelope.slope_stability",
        status=PASS,
        params={"C": c_const, "pairs": len(list(pairs))},
        tolerances={"tol_support": tol_support, "lap_tol": lap_tol},
        data={"worst_ratio": worst_ratio},
    )


# mean value ---------------------------------------------------------------------

def mean_value_monotonicity_check(u: ScalarField, c_const: float, x, radii,
                                  quad_tol: float = 1e-6,
                                  lap_tol: float = 1e-6) -> CheckReport:
    """Sphere and ball averages of u(y) - (C/2)|y|^2 must be nonincreasing.

    Also reports the small-radius ball average as the canonical-representative
    estimate at x.  The FD Laplacian of u is verified against C first; the
    corrected function's own Laplacian sign is evaluated and classified.
    """
    x = np.asarray(x, dtype=float)
    radii = np.asarray(sorted(radii), dtype=float)
    if radii[0] <= 0:
        raise InputError("radii must be positive")
    n = u.dim

    lap = float(np.trace(u.hessian(x).full()))
    if lap > c_const + lap_tol:
        return CheckReport(
            check="envelope.mean_value",
            status=HYPOTHESIS_VIOLATION,
            params={"C": c_const},
            worst_violation=float(lap - c_const),
            witness=x.tolist(),
            tolerances={"lap_tol": lap_tol},
            notes=[f"FD Laplacian {lap:.3e} exceeds C={c_const}"],
        )

    def corrected(y):
        y = np.atleast_1d(y)
        return u.eval(y) - 0.5 * c_const * float(y @ y)

    sph = np.array([sphere_average(corrected, x, r, n) for r in radii])
    bal = np.array([ball_average(corrected, x, r, n) for r in radii])
    scale = 1.0 + float(np.abs(sph).max())
    tol = quad_tol * scale
    sph_bad = float(np.max(np.diff(sph))) if len(sph) > 1 else 0.0
    bal_bad = float(np.max(np.diff(bal))) if len(bal) > 1 else 0.0
    worst = max(sph_bad, bal_bad)
    return CheckReport(
        check="envelope.mean_value",
        status=PASS if worst <= tol else FAIL,
        params={"C": c_const, "x": x.tolist(), "radii": radii.tolist()},
        worst_violation=float(max(0.0, worst)),
        tolerances={"quad_tol": tol, "lap_tol": lap_tol},
        data={"sphere_averages": sph.tolist(), "ball_averages": bal.tolist(),
              "canonical_estimate": float(bal[0])},
    )

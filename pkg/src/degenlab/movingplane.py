"""Moving-plane harness: reflections, scans, monotonicity and symmetry reports.

Positive boundary-vanishing samples on the unit ball are reflected across
planes x.e = lambda; the sign of w_lambda = u(reflected) - u over the cap
classifies monotonicity in each direction and, scanning all directions,
radial symmetry.  The harness classifies the sample, it does not prove
anything about the underlying function; every report carries its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._sampling import direction_set
from .errors import InputError, ResolutionError
from .fields import Grid, ScalarField
from .report import FAIL, PASS, CheckReport

SYMMETRIC_MONOTONE = "SYMMETRIC+MONOTONE"
SYMMETRIC_NOT_MONOTONE = "SYMMETRIC_NOT_MONOTONE"
ASYMMETRIC = "ASYMMETRIC"


@dataclass
class SolutionSample:
    """Grid sample of a positive solution on the (punctured) unit ball."""

    grid: Grid
    values: np.ndarray
    name: str = ""

    @staticmethod
    def from_field(u: ScalarField, h: float, radius: float = 1.0,
                   exclusion: float | None = None, name: str | None = None):
        grid = Grid.on_ball(radius, h, u.dim, singular_set=u.singular_set,
                            exclusion=exclusion if exclusion is not None else 3 * h)
        pts = grid.nodes()
        vals = np.full(pts.shape[0], np.nan)
        for i in np.flatnonzero(grid.mask.ravel()):
            vals[i] = u.eval(pts[i])
        return SolutionSample(grid, vals.reshape(grid.extents),
                              name=name if name is not None else u.name)

    def hessian_scale(self) -> float:
        """Crude interior curvature scale for the classification tolerance."""
        v = self.values
        h2 = self.grid.h ** 2
        worst = 0.0
        for ax in range(self.grid.dim):
            sl = [slice(1, -1)] * self.grid.dim
            sp, sm = list(sl), list(sl)
            sp[ax] = slice(2, None)
            sm[ax] = slice(0, -2)
            sec = (v[tuple(sp)] - 2 * v[tuple(sl)] + v[tuple(sm)]) / h2
            good = np.isfinite(sec)
            if good.any():
                worst = max(worst, float(np.nanpercentile(np.abs(sec[good]), 95)))
        return max(1.0, worst)


@dataclass
class PlaneScan:
    direction: np.ndarray
    lambdas: np.ndarray
    min_w: np.ndarray
    lambda_bar: float
    tol: float


def _interp(sample: SolutionSample, pts: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of the sample; nan when a corner is masked."""
    grid = sample.grid
    rel = (pts - grid.origin) / grid.h
    base = np.floor(rel).astype(int)
    frac = rel - base
    n = grid.dim
    ext = np.array(grid.extents)
    out = np.zeros(pts.shape[0])
    ok = np.all((base >= 0) & (base + 1 <= ext - 1), axis=1)
    out[~ok] = np.nan
    vals = sample.values
    mask = sample.grid.mask
    for corner in np.ndindex(*(2,) * n):
        c = np.array(corner)
        idx = base + c
        w = np.prod(np.where(c == 1, frac, 1.0 - frac), axis=1)
        flat = np.ravel_multi_index(np.clip(idx, 0, ext - 1).T, grid.extents)
        cv = vals.ravel()[flat]
        cm = mask.ravel()[flat]
        bad = ok & (~cm) & (w > 1e-12)
        out[bad] = np.nan
        out[ok] += np.where(np.isfinite(cv), cv, 0.0)[ok] * w[ok]
        out[ok & ~np.isfinite(cv) & (w > 1e-12)] = np.nan
    return out


def reflect_and_diff(sample: SolutionSample, lam: float, direction) -> tuple:
    """w_lambda = u(reflected) - u on the cap {x.e > lambda, |x| < 1}.

    Returns (node points, w values); reflections landing in the puncture
    exclusion or outside the sampled ball come back masked (nan) and are
    dropped.
    """
    if not (0.0 < lam < 1.0):
        raise InputError("lambda must lie in (0, 1)")
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    grid = sample.grid
    pts = grid.nodes()
    flat_mask = grid.mask.ravel()
    proj = pts @ e
    cap = flat_mask & (proj > lam + 1e-12)
    cap_pts = pts[cap]
    refl = cap_pts - 2.0 * ((cap_pts @ e) - lam)[:, None] * e[None, :]
    w = _interp(sample, refl) - sample.values.ravel()[cap]
    good = np.isfinite(w)
    return cap_pts[good], w[good]


def lambda_bar_scan(sample: SolutionSample, direction, lam_grid=None,
                    tol: float | None = None) -> PlaneScan:
    """Per-plane minima of w_lambda and the smallest nonnegativity threshold.

    lambda_bar is the smallest grid lambda such that min w >= -tol for every
    scanned plane beyond it; tol defaults to 5 h^2 times the sample's
    curvature scale.
    """
    grid = sample.grid
    h = grid.h
    if lam_grid is None:
        lam_grid = np.arange(h, 1.0 - h / 2, h)
    lam_grid = np.asarray(lam_grid, dtype=float)
    if np.any(np.diff(lam_grid) <= 0):
        raise InputError("lambda grid must be strictly increasing")
    if tol is None:
        tol = 5.0 * h * h * sample.hessian_scale()
    mins = np.empty(lam_grid.size)
    for i, lam in enumerate(lam_grid):
        _, w = reflect_and_diff(sample, lam, direction)
        mins[i] = w.min() if w.size else 0.0
    lam_bar = lam_grid[-1]
    ok_from = lam_grid.size
    for i in range(lam_grid.size - 1, -1, -1):
        if mins[i] >= -tol:
            ok_from = i
        else:
            break
    lam_bar = lam_grid[ok_from] if ok_from < lam_grid.size else float(lam_grid[-1])
    return PlaneScan(direction=np.asarray(direction, dtype=float),
                     lambdas=lam_grid, min_w=mins, lambda_bar=float(lam_bar),
                     tol=float(tol))


def monotonicity_check(sample: SolutionSample, direction, margin: float | None = None,
                       tol: float | None = None) -> CheckReport:
    """Sign of the directional derivative on the half-ball {x.e > margin}.

    The conclusion of the symmetry theorem: du/de < 0 strictly beyond the
    mid-plane.  Reports nodes where the FD directional derivative exceeds
    +tol.
    """
    grid = sample.grid
    h = grid.h
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    if margin is None:
        margin = 2 * h
    if tol is None:
        tol = 5.0 * h * sample.hessian_scale()
    pts = grid.nodes()
    flat_mask = grid.mask.ravel()
    sel = flat_mask & (pts @ e > margin)
    fwd = _interp(sample, pts[sel] + h * e)
    bwd = _interp(sample, pts[sel] - h * e)
    d = (fwd - bwd) / (2 * h)
    good = np.isfinite(d)
    viol = d[good] > tol
    count = int(viol.sum())
    worst = float(np.max(d[good])) if good.any() else 0.0
    witness = pts[sel][good][int(np.argmax(d[good]))].tolist() if good.any() else None
    return CheckReport(
        check="movingplane.monotonicity",
        status=PASS if count == 0 else FAIL,
        params={"direction": e.tolist(), "margin": margin, "sample": sample.name},
        worst_violation=float(max(0.0, worst)),
        witness=witness,
        tolerances={"tol": tol},
        grid=grid.describe(),
        data={"violations": count},
    )


def shell_spread(sample: SolutionSample, decimals: int = 9) -> float:
    """Max value spread across nodes sharing the same radius exactly.

    Radial samples have zero spread; asymmetric ones do not.
    """
    pts = sample.grid.nodes()
    flat_mask = sample.grid.mask.ravel()
    vals = sample.values.ravel()
    radii = np.round(np.linalg.norm(pts, axis=1), decimals)
    spread = 0.0
    order = np.argsort(radii[flat_mask], kind="stable")
    rs = radii[flat_mask][order]
    vs = vals[flat_mask][order]
    start = 0
    for i in range(1, rs.size + 1):
        if i == rs.size or rs[i] != rs[start]:
            if i - start > 1:
                spread = max(spread, float(vs[start:i].max() - vs[start:i].min()))
            start = i
    return spread


def radial_symmetry_report(sample: SolutionSample, directions=None,
                           lam_bar_tol_factor: float = 2.0,
                           seed: int = 0) -> CheckReport:
    """Scan all directions (and negations) and classify the sample.

    SYMMETRIC+MONOTONE: every scan gives lambda_bar within tol_factor grid
    steps of the smallest scanned plane and the monotonicity check passes in
    every direction.  Shell spread is reported alongside as an independent
    symmetry measure.
    """
    grid = sample.grid
    h = grid.h
    if directions is None:
        directions = direction_set(grid.dim, seed)
    dirs = []
    for d in np.asarray(directions, dtype=float):
        dirs.append(d)
        if not any(np.allclose(-d, x) for x in dirs):
            dirs.append(-d)
    lam_ok = True
    mono_ok = True
    worst_lam = 0.0
    worst_dir = None
    for d in dirs:
        scan = lambda_bar_scan(sample, d)
        if scan.lambda_bar > worst_lam:
            worst_lam = scan.lambda_bar
            worst_dir = d.tolist()
        if scan.lambda_bar > lam_bar_tol_factor * h + 1e-12:
            lam_ok = False
        mono = monotonicity_check(sample, d)
        if mono.status != PASS:
            mono_ok = False
    spread = shell_spread(sample)
    spread_ok = spread <= 10 * h * h * sample.hessian_scale()
    if lam_ok and mono_ok:
        classification = SYMMETRIC_MONOTONE
    elif spread_ok:
        classification = SYMMETRIC_NOT_MONOTONE
    else:
        classification = ASYMMETRIC
    return CheckReport(
        check="movingplane.radial_symmetry",
        status=PASS if classification == SYMMETRIC_MONOTONE else FAIL,
        params={"sample": sample.name, "directions": len(dirs)},
        worst_violation=float(worst_lam),
        witness=worst_dir,
        tolerances={"lambda_bar_tol": lam_bar_tol_factor * h},
        grid=grid.describe(),
        seed=seed,
        data={"classification": classification, "shell_spread": spread,
              "monotone": mono_ok, "lambda_bars_small": lam_ok},
    )

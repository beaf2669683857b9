"""Batch driver: every checker as a subcommand, reproducible and scriptable.

Subcommands run either a single raw check on a chosen builtin (exit reflects
that check) or, bare, the full paper battery for their area, where each check
carries the outcome the source material predicts (violations included) and
the exit code reflects observed-vs-expected.  Reports stream as JSON Lines;
a summary.json closes each run.

Exit codes: 0 all as expected, 1 at least one mismatch/failure, 2 usage or
config error, 3 inconclusive results only.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import distfield as dfm
from . import envelope as evm
from . import fields as flm
from . import movingplane as mpm
from . import operators as opm
from . import superaffine as sam
from . import symmat as smm
from .report import (DEGENERATE, FAIL, HYPOTHESIS_VIOLATION, INCONCLUSIVE,
                     PASS, CheckReport)

QUICK = {"kyfan_mats": 60, "b2_draws": 150, "pts": 30, "grid_1d": 1 / 256,
         "grid_2d": 1 / 64, "abp_h": 1 / 40, "mp_h": 1 / 32, "radii": 8}
FULL = {"kyfan_mats": 200, "b2_draws": 500, "pts": 100, "grid_1d": 1 / 256,
        "grid_2d": 1 / 128, "abp_h": 1 / 80, "mp_h": 1 / 64, "radii": 20}


def _report(check, ok, tolerances=None, status_override=None, **data):
    status = status_override if status_override else (PASS if ok else FAIL)
    return CheckReport(check=check, status=status, tolerances=tolerances or {},
                       data=data)


# ----------------------------------------------------------------- suites ----

def suite_kyfan(seed: int, p: dict, tol_scale: float):
    out = []
    rng = np.random.default_rng(seed)
    tol = 1e-9 * tol_scale

    worst_under = 0.0
    worst_frame = 0.0
    t0 = time.perf_counter()
    for i in range(p["kyfan_mats"]):
        n = int(rng.integers(2, 7))
        a = rng.standard_normal((n, n))
        m = smm.SymMat.from_full(a + a.T)
        dec = smm.eigh(m)
        for k in range(1, n + 1):
            psum = float(dec.eigenvalues[:k].sum())
            sampled = smm.kyfan_sampled_min(m, k, trials=50, seed=seed + 31 * i + k)
            worst_under = max(worst_under, psum - sampled)
            fr = dec.frame[:, :k]
            at_frame = float(np.einsum("ij,ik,kj->", fr, m.full(), fr))
            worst_frame = max(worst_frame, abs(at_frame - psum))
    rep = _report("kyfan.variational_bound", worst_under <= tol and worst_frame <= tol,
                  tolerances={"tol": tol}, matrices=p["kyfan_mats"],
                  worst_undershoot=worst_under, worst_frame_gap=worst_frame,
                  runtime_s=time.perf_counter() - t0)
    out.append((rep, PASS))

    worst = -np.inf
    for i in range(p["b2_draws"]):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, n))
        l = int(rng.integers(k + 1, n + 1))
        a = rng.standard_normal((n, n))
        m = smm.SymMat.from_full(3 * (a + a.T))
        deltas = rng.uniform(1e-6, (l - k) / k, size=k)
        r = smm.perturbation_inequality_check(m, deltas, l, tol=tol)
        worst = max(worst, r.worst_violation)
        if r.status != PASS:
            out.append((r, PASS))
    out.append((_report("kyfan.perturbation_suite", worst <= tol,
                        tolerances={"tol": tol}, draws=p["b2_draws"],
                        worst_violation=worst), PASS))

    # shift equivariance + trace identity
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 7))
        a = rng.standard_normal((n, n))
        m = smm.SymMat.from_full(a + a.T)
        c = float(rng.standard_normal())
        k = int(rng.integers(1, n + 1))
        shift = smm.partial_sum(m + c * smm.SymMat.identity(n), k)
        worst = max(worst, abs(shift - smm.partial_sum(m, k) - c * k))
        worst = max(worst, abs(smm.partial_sum(m, n) - m.trace()) * 0.1)
    out.append((_report("kyfan.shift_equivariance", worst <= 1e-9,
                        tolerances={"tol": 1e-9}, worst=worst), PASS))

    # cone monotonicity under adding PSD matrices
    bad = 0
    tried = 0
    for _ in range(300):
        n = int(rng.integers(2, 7))
        a = rng.standard_normal((n, n))
        m = smm.SymMat.from_full(a + a.T + (n - 1) * np.eye(n) * rng.uniform(0.2, 2))
        k = int(rng.integers(1, n + 1))
        if not smm.gamma_k_member(m, k):
            continue
        tried += 1
        b = rng.standard_normal((n, n))
        psd = smm.SymMat.from_full(b @ b.T)
        if not smm.gamma_k_member(m + psd, k):
            bad += 1
    out.append((_report("kyfan.cone_monotonicity", bad == 0, draws=tried, bad=bad), PASS))

    # extremal operator on multiples of the identity
    worst = 0.0
    for c, alpha, n in [(2.0, 0.5, 3), (-1.5, 0.25, 4), (0.7, 0.75, 2), (-0.3, 0.5, 5)]:
        got = smm.pucci_plus(c * smm.SymMat.identity(n), alpha)
        want = n * c if c > 0 else n * c * (n - 1) / (1 - alpha)
        worst = max(worst, abs(got - want))
    out.append((_report("kyfan.extremal_identity_scaling", worst <= 1e-12,
                        worst=worst), PASS))

    # cone-openness probe along a shrinking ray
    frame = np.eye(4)
    m0 = smm.SymMat.diag([0.0, 1.0, 1.0, 1.0])
    probes = [smm.property_pk_probe(1, 2, m0, eps, 0.5, frame) for eps in
              (0.1, 0.01, 0.001)]
    out.append((_report("kyfan.pk_probe_ray", all(probes), probes=probes), PASS))
    return out


def suite_examples(seed: int, p: dict, tol_scale: float):
    out = []
    rng = np.random.default_rng(seed)
    tol_an = 1e-8 * tol_scale
    tol_fd = 1e-4 * tol_scale

    def seeded_points(n, count):
        pts = rng.standard_normal((count, n))
        radii = 0.06 + 0.9 * rng.random(count)
        return pts / np.linalg.norm(pts, axis=1)[:, None] * radii[:, None]

    for n in (1, 2, 3):
        for l in (2, 3):
            worst = max(abs(opm.example1_residual(x, n, l))
                        for x in seeded_points(n, p["pts"]))
            out.append((_report(f"examples.one_n{n}_l{l}", worst <= tol_an,
                                tolerances={"tol": tol_an}, worst=worst), PASS))
    worst = max(abs(opm.example1_residual(x, 3, 2, use_fd=True))
                for x in seeded_points(3, max(10, p["pts"] // 3)))
    out.append((_report("examples.one_fd", worst <= tol_fd,
                        tolerances={"tol": tol_fd}, worst=worst), PASS))

    for alpha in (0.25, 0.5, 0.81):
        pts = seeded_points(2, p["pts"])
        worst = max(abs(opm.example2_residual(x, alpha)) for x in pts)
        ell = [opm.coefficient_eigen_range(opm.example2_coefficients(x, alpha)) for x in pts]
        pd = min(e[0] for e in ell)
        out.append((_report(f"examples.two_alpha{alpha}", worst <= tol_an and pd > 0,
                            tolerances={"tol": tol_an}, worst=worst,
                            min_coeff_eigenvalue=pd), PASS))
    worst_fd = max(abs(opm.example2_residual(x, 0.5, use_fd=True))
                   for x in seeded_points(2, max(10, p["pts"] // 3)))
    out.append((_report("examples.two_fd", worst_fd <= tol_fd,
                        tolerances={"tol": tol_fd}, worst=worst_fd), PASS))
    wrong = abs(opm.example2_residual([0.3, 0.4], 0.5, eps=0.5 * (1 - np.sqrt(0.5))))
    out.append((_report("examples.two_wrong_eps_detected", wrong > 1e-3,
                        residual=wrong), PASS))

    for n, alpha in ((2, 0.5), (3, 0.5), (3, 0.25), (4, 0.75)):
        pts = seeded_points(n, p["pts"])
        worst = max(abs(opm.example3_residual(x, n, alpha)) for x in pts)
        ell = [opm.coefficient_eigen_range(opm.example3_coefficients(x, alpha, n)) for x in pts]
        pd = min(e[0] for e in ell)
        out.append((_report(f"examples.three_n{n}_alpha{alpha}", worst <= tol_an and pd > 0,
                            tolerances={"tol": tol_an}, worst=worst,
                            min_coeff_eigenvalue=pd), PASS))
    worst_fd = max(abs(opm.example3_residual(x, 3, 0.5, use_fd=True))
                   for x in seeded_points(3, max(10, p["pts"] // 3)))
    out.append((_report("examples.three_fd", worst_fd <= tol_fd,
                        tolerances={"tol": tol_fd}, worst=worst_fd), PASS))

    # extremal-operator radial example: residuals, junction, root, sign pattern
    worst = 0.0
    for n in (2, 3, 4, 5):
        for alpha in (0.25, 0.5, 0.75):
            rbar = flm.pucci_radial_root(n, alpha)
            radii = np.linspace(0.05, rbar * 0.98, p["radii"])
            radii = radii[np.abs(radii - 1.0) > 1e-6]
            worst = max(worst, max(abs(opm.pucci_example_residual(n, alpha, r))
                                   for r in radii))
    out.append((_report("examples.extremal_radial_residual", worst <= tol_an,
                        tolerances={"tol": tol_an}, worst=worst), PASS))

    worst_j = 0.0
    worst_root = 0.0
    for n in (2, 3, 4, 5):
        for alpha in (0.25, 0.5, 0.75):
            prof = flm.pucci_radial_profile(n, alpha)
            d = 1e-12
            worst_j = max(worst_j,
                          abs(prof.value(1 - d) - prof.value(1 + d)),
                          abs(prof.d1(1 - d) - prof.d1(1 + d)),
                          abs(prof.d2(1 - d) - prof.d2(1 + d)))
            rbar = flm.pucci_radial_root(n, alpha)
            worst_root = max(worst_root, abs(prof.value(rbar)))
            if not rbar > 1:
                worst_root = np.inf
    out.append((_report("examples.extremal_radial_junction", worst_j <= 1e-10,
                        tolerances={"tol": 1e-10}, worst=worst_j), PASS))
    out.append((_report("examples.extremal_radial_root", worst_root <= 1e-12,
                        tolerances={"tol": 1e-12}, worst=worst_root), PASS))

    prof = flm.pucci_radial_profile(3, 0.5)
    rbar = flm.pucci_radial_root(3, 0.5)
    rs = np.linspace(0.05, rbar * 0.99, 200)
    signs_ok = (all(prof.d2(r) < 0 for r in rs)
                and all(prof.d1(r) > 0 for r in rs if r < 1 - 1e-9)
                and all(prof.d1(r) < 0 for r in rs if r > 1 + 1e-9))
    out.append((_report("examples.extremal_radial_signs", signs_ok), PASS))

    # conformal Hessian: both forms agree on a smooth positive field (n=4)
    n = 4
    u = flm.ScalarField(n, lambda x: 1.0 + 0.3 * float(x @ x) + 0.1 * float(x[0]))
    w = flm.ScalarField(n, lambda x: u.eval(x) ** (-2.0 / (n - 2.0)))
    worst = 0.0
    for _ in range(10):
        x = rng.standard_normal(n) * 0.3
        au = opm.conformal_hessian(u, x, "A_u").full()
        aw = opm.conformal_hessian(w, x, "A_w").full()
        worst = max(worst, float(np.abs(au - aw).max()))
    out.append((_report("examples.conformal_identity", worst <= 1e-7,
                        tolerances={"tol": 1e-7}, worst=worst), PASS))
    const = flm.ScalarField(3, lambda x: 1.0)
    zw = float(np.abs(opm.conformal_hessian(const, np.zeros(3), "A_w").full()).max())
    zu = float(np.abs(opm.conformal_hessian(const, np.zeros(3), "A_u").full()).max())
    out.append((_report("examples.conformal_trivial", max(zw, zu) <= 1e-9,
                        worst=max(zw, zu)), PASS))
    return out


def suite_superaffine(seed: int, p: dict, tol_scale: float):
    out = []
    rep = sam.check_condition_superaffine(flm.step_e1(), r_bar=2.5, v_list=[1.0],
                                          grid_h=p["grid_1d"] * 2.5, seed=seed)
    out.append((rep, FAIL))
    for a in (0.25, 0.5, 0.75):
        rep = sam.check_condition_superaffine(flm.pow_alpha(a, 2), r_bar=1.0,
                                              v_samples=4, r_samples=3,
                                              grid_h=p["grid_2d"], seed=seed)
        out.append((rep, FAIL))
    rep = sam.check_condition_superaffine(flm.log_barrier(2), r_bar=1.0,
                                          v_samples=4, r_samples=3,
                                          grid_h=p["grid_2d"], seed=seed)
    out.append((rep, PASS))

    dom = sam.PuncturedDomain.punctured_ball(1.0, 2)
    grid = dom.grid(1 / 32)
    neg = flm.ScalarField(2, lambda x: -float(x @ x), lambda x: -2 * x,
                          lambda x: -2 * np.eye(2), name="-|x|^2")
    pos = flm.ScalarField(2, lambda x: float(x @ x), lambda x: 2 * x,
                          lambda x: 2 * np.eye(2), name="+|x|^2")
    out.append((sam.check_k_superaffine_grid(neg, 1, dom, grid), PASS))
    out.append((sam.check_k_superaffine_grid(pos, 1, dom, grid), FAIL))
    out.append((sam.check_k_superaffine_grid(flm.log_barrier(2), 2, dom, grid,
                                             use_fd=True), PASS))

    out.append((sam.check_Ak1a(flm.appD_pow(0.5, 2), 0, 0.5, dom, grid), PASS))
    a, k, n = 0.5, 1, 3
    epss = 0.1 * (1 - a) / (1 + 2 * k)
    u = flm.appD_split(a, epss, k, n)
    dom3 = sam.PuncturedDomain(1.0, np.zeros(3), u.singular_set)
    g3 = dom3.grid(1 / 16)
    out.append((sam.check_Ak1a(u, k, a, dom3, g3), PASS))
    out.append((sam.check_k_superaffine_grid(u, k + 2, dom3, g3), FAIL))

    # difference stability: u in the 2-cone minus a harmonic stays 1-superaffine
    for coeffs in ((1.0, 0.0), (0.4, -0.7)):
        harm = flm.ScalarField(
            2, lambda x, c=coeffs: c[0] * (x[0] ** 2 - x[1] ** 2) + c[1] * 2 * x[0] * x[1],
            grad=lambda x, c=coeffs: np.array([2 * c[0] * x[0] + 2 * c[1] * x[1],
                                               -2 * c[0] * x[1] + 2 * c[1] * x[0]]),
            hess=lambda x, c=coeffs: np.array([[2 * c[0], 2 * c[1]], [2 * c[1], -2 * c[0]]]),
            name="harmonic_poly")
        lb = flm.log_barrier(2)
        diff = flm.ScalarField(2, lambda x: lb.eval(x) - harm.eval(x),
                               grad=lambda x: lb.gradient(x) - harm.gradient(x),
                               hess=lambda x: lb.hessian(x).full() - harm.hessian(x).full(),
                               singular_set=lb.singular_set, name="log_minus_harmonic")
        out.append((sam.check_k_superaffine_grid(diff, 1, dom, grid), PASS))
    return out


def suite_barrier(seed: int, p: dict, tol_scale: float):
    out = []
    eps, rb = 1e-3, 2.0
    ident = max(abs(sam.barrier_h_eps(eps, eps, rb) - 0.0),
                abs(sam.barrier_h_eps(rb, eps, rb) - 1.0),
                abs(sam.barrier_g(1 / np.e, "kpos") - 1.0))
    mono_ok = all(sam.barrier_h_eps_d1(r, eps, rb) > 0
                  and sam.barrier_h_eps_d2(r, eps, rb) < 0
                  for r in np.geomspace(2 * eps, rb * 0.99, 40))
    out.append((_report("barrier.h_identities", ident <= 1e-12 and mono_ok,
                        tolerances={"tol": 1e-12}, worst=ident), PASS))

    g2 = flm.Grid.on_ball(0.3, 0.01, 2, singular_set=dfm.PointSet(np.zeros((1, 2))),
                          exclusion=0.04)
    out.append((sam.barrier_AAB2_check(dfm.PointSet(np.zeros((1, 2))), 0,
                                       r_bar=6.0, grid=g2), PASS))

    circ = dfm.CircleInR3(np.zeros(3), 1.0)
    rbar3 = 3.0
    pts = []
    for ang in np.linspace(0, 2 * np.pi, 24, endpoint=False):
        foot = np.array([np.cos(ang), np.sin(ang), 0.0])
        for dd in (0.012 * rbar3, 0.025 * rbar3, 0.049 * rbar3):
            for nd in (foot, np.array([0, 0, 1.0]), (foot + np.array([0, 0, 1.0])) / np.sqrt(2)):
                pts.append(foot + dd * nd)
    out.append((sam.barrier_AAB2_check(circ, 1, r_bar=rbar3, points=np.array(pts)), PASS))

    # minimum principle: five satisfying instances
    dom2 = sam.PuncturedDomain.punctured_ball(1.0, 2)
    grid2 = dom2.grid(1 / 64)
    out.append((sam.minimum_principle_check(flm.log_barrier(2), dom2, 0, grid2), PASS))

    shifted = flm.ScalarField(
        2, lambda x: -np.log(np.linalg.norm(x)) + 0.5 * x[0],
        grad=lambda x: -x / float(x @ x) + np.array([0.5, 0.0]),
        hess=lambda x: (2 * np.outer(x, x) / float(x @ x) - np.eye(2)) / float(x @ x),
        singular_set=dfm.PointSet(np.zeros((1, 2))), name="log+linear")
    out.append((sam.minimum_principle_check(shifted, dom2, 0, grid2), PASS))

    negq = flm.ScalarField(2, lambda x: -float(x @ x), lambda x: -2 * x,
                           lambda x: -2 * np.eye(2), name="-|x|^2")
    out.append((sam.minimum_principle_check(negq, dom2, 0, grid2), PASS))

    dom3 = sam.PuncturedDomain.punctured_ball(1.0, 3)
    grid3 = dom3.grid(1 / 24)
    newt = flm.RadialProfile(value=lambda r: 1 / r, d1=lambda r: -r ** -2,
                             d2=lambda r: 2 * r ** -3, name="1/|x|").to_field(3)
    out.append((sam.minimum_principle_check(newt, dom3, 0, grid3), PASS))

    cone = flm.RadialProfile(value=lambda r: -r, d1=lambda r: -1.0,
                             d2=lambda r: 0.0, name="-|x|").to_field(3)
    out.append((sam.minimum_principle_check(cone, dom3, 1, grid3), PASS))

    # the two counterexamples reject their hypotheses
    unb = flm.RadialProfile(value=lambda r: -1 / r, d1=lambda r: r ** -2,
                            d2=lambda r: -2 * r ** -3, name="-|x|^{2-n}").to_field(3)
    out.append((sam.minimum_principle_check(unb, dom3, 0, grid3), HYPOTHESIS_VIOLATION))
    out.append((sam.minimum_principle_check(flm.appD_pow(0.25, 2), dom2, 0, grid2),
                HYPOTHESIS_VIOLATION))
    return out


def suite_slopes(seed: int, p: dict, tol_scale: float):
    out = []
    u = flm.max_coords(1, 2)
    cands = [np.zeros(2), np.array([0.5, 0.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    ss = sam.support_slope_set(u, cands, [0.5, 0.25, 0.125, 0.0625])
    ok = (len(ss.slopes) == 3 and ss.hull_dim == 1 and len(ss.rejected) == 1)
    out.append((_report("slopes.max_coords_1", ok, kept=len(ss.slopes),
                        hull_dim=ss.hull_dim), PASS))

    u = flm.max_coords(2, 3)
    cands = [np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0]),
             np.array([0.5, 0.5, 0]), np.array([0, 0, 1.0])]
    ss = sam.support_slope_set(u, cands, [0.5, 0.25, 0.125])
    ok = ss.hull_dim == 2 and len(ss.rejected) == 1
    out.append((_report("slopes.max_coords_2", ok, hull_dim=ss.hull_dim), PASS))

    # superharmonic instances keep at most one slope
    negq = flm.ScalarField(2, lambda x: -float(x @ x), name="-|x|^2")
    ss = sam.support_slope_set(negq, [np.zeros(2), np.array([0.3, 0.0])],
                               [0.25, 0.1, 0.05, 0.02])
    ok = len(ss.slopes) == 1 and np.allclose(ss.slopes[0], 0)
    lin = flm.ScalarField(2, lambda x: float(x[0]), name="x1")
    ss2 = sam.support_slope_set(lin, [np.zeros(2), np.array([1.0, 0.0]),
                                      np.array([0.0, 1.0])], [0.25, 0.1, 0.05, 0.02])
    ok2 = len(ss2.slopes) == 1 and np.allclose(ss2.slopes[0], [1.0, 0.0])
    out.append((_report("slopes.superharmonic_unique", ok and ok2), PASS))

    # slope stability under refinement
    prof = flm.RadialProfile(value=lambda r: -np.log(r), d1=lambda r: -1 / r,
                             d2=lambda r: 1 / r ** 2)
    lb = prof.to_field(2)
    rng = np.random.default_rng(seed)
    zs = rng.standard_normal((200, 2))
    zs = 0.31 + 0.25 * zs / np.abs(zs).max()
    omega = lambda r: 2.0 * np.sqrt(r)
    ratios = []
    for h in (1 / 64, 1 / 128):
        pairs = []
        for _ in range(12):
            x = np.array([0.4, 0.3]) + 0.1 * rng.standard_normal(2)
            y = x + 0.05 * rng.standard_normal(2)
            pairs.append((x, flm.fd_gradient(lb, x, h), y, flm.fd_gradient(lb, y, h)))
        rep = evm.slope_stability_check(lb, 0.0, pairs, omega, zs)
        if rep.status != PASS:
            out.append((rep, PASS))
            ratios = None
            break
        ratios.append(rep.data["worst_ratio"])
    if ratios is not None:
        change = abs(ratios[1] - ratios[0]) / max(ratios[0], 1e-12)
        out.append((_report("slopes.stability_refinement", change < 0.20,
                            tolerances={"max_change": 0.20}, ratios=ratios,
                            change=change), PASS))

    harm = flm.ScalarField(2, lambda x: float(x[0] ** 2 - x[1] ** 2),
                           grad=lambda x: np.array([2 * x[0], -2 * x[1]]),
                           hess=lambda x: np.diag([2.0, -2.0]), name="harmonic")
    out.append((evm.mean_value_monotonicity_check(harm, 0.0, [0.2, 0.1],
                                                  [0.05, 0.1, 0.2, 0.3]), PASS))
    out.append((evm.mean_value_monotonicity_check(flm.log_barrier(2), 0.0, [0.4, 0.0],
                                                  [0.2, 0.3, 0.5, 0.6]), PASS))
    return out


def suite_abp(seed: int, p: dict, tol_scale: float):
    out = []
    vee = flm.ScalarField(1, lambda x: abs(float(np.atleast_1d(x)[0])), name="|x| 1d")
    cone = flm.ScalarField(2, lambda x: float(np.linalg.norm(x)), name="|x| 2d")
    zero1 = flm.ScalarField(1, lambda x: 0.0)
    zero2 = flm.ScalarField(2, lambda x: 0.0)
    for eps in (0.02, 0.05, 0.1):
        out.append((evm.abp_check(vee, zero1, eps, 1.0, p["grid_1d"]), PASS))
        out.append((evm.abp_check(cone, zero2, eps, 1.0, p["abp_h"]), PASS))
    lifted = flm.ScalarField(1, lambda x: 2.0 + abs(float(np.atleast_1d(x)[0])))
    out.append((evm.abp_check(lifted, zero1, 0.5, 1.0, p["grid_1d"]), DEGENERATE))

    # idempotence and monotonicity on seeded pairs
    rng = np.random.default_rng(seed)
    g = flm.Grid.on_box([-1, -1], [1, 1], 1 / 12)
    pts = g.nodes()
    worst_idem = 0.0
    mono_bad = 0
    for _ in range(25):
        a = rng.standard_normal(3)
        v1 = np.cos(3 * pts @ a[:2]) + a[2] * np.sum(pts ** 2, axis=1)
        v2 = v1 + 0.3 + 0.2 * np.sin(2 * pts[:, 0])
        f1 = evm.SampledFunction(g, v1.reshape(g.extents))
        f2 = evm.SampledFunction(g, v2.reshape(g.extents))
        e1 = evm.convex_envelope(f1)
        e2 = evm.convex_envelope(f2)
        again = evm.convex_envelope(evm.SampledFunction(g, e1.gamma))
        worst_idem = max(worst_idem, float(np.abs(again.gamma - e1.gamma).max()))
        if np.any(e1.gamma > e2.gamma + 1e-11):
            mono_bad += 1
    out.append((_report("abp.envelope_idempotent", worst_idem <= 1e-12,
                        tolerances={"tol": 1e-12}, worst=worst_idem), PASS))
    out.append((_report("abp.envelope_monotone", mono_bad == 0, bad=mono_bad), PASS))
    return out


def suite_distfield(seed: int, p: dict, tol_scale: float):
    out = []
    rng = np.random.default_rng(seed)
    point = dfm.PointSet(np.zeros((1, 3)))
    circ = dfm.CircleInR3(np.zeros(3), 1.0)
    sph = dfm.Sphere(np.zeros(3), 1.0, 3)
    rbarg = 4.0
    gs = {
        "t": (lambda t: t, lambda t: 1.0, lambda t: 0.0),
        "t2": (lambda t: t * t, lambda t: 2 * t, lambda t: 2.0),
        "log": (lambda t: -np.log(t / rbarg), lambda t: -1.0 / t, lambda t: 1.0 / t ** 2),
    }

    def tube_points(e, d0, count=24):
        pts = []
        for _ in range(count):
            x = rng.standard_normal(3)
            foot = e.nearest(x)
            nrm = x - foot
            nn = np.linalg.norm(nrm)
            if nn < 1e-9:
                continue
            pts.append(foot + nrm / nn * d0)
        return np.array(pts)

    for ename, e in (("point", point), ("circle", circ), ("sphere", sph)):
        for gname, (gv, g1, g2) in gs.items():
            base = tube_points(e, 0.08)
            rep = dfm.expansion_stability(e, gv, g1, g2, base)
            rep.params["spec"] = ename
            rep.params["profile"] = gname
            rep.check = f"distfield.expansion_{ename}_{gname}"
            out.append((rep, PASS))

    for e, x in ((dfm.AffineSlice(np.zeros(3), np.eye(3)[:, 2:]), [0.3, 0.2, 0.9]),
                 (circ, [1.1, 0.2, 0.05]), (dfm.PointSet(np.zeros((1, 3))), [0.3, -0.2, 0.5])):
        out.append((dfm.local_coordinates_check(e, x), PASS))

    flat = dfm.AffineSlice(np.zeros(3), np.eye(3)[:, 2:])
    base = np.array([[0.05 * np.cos(t), 0.05 * np.sin(t), 0.2 * np.sin(2 * t)]
                     for t in np.linspace(0, 2 * np.pi, 20, endpoint=False)])
    out.append((dfm.sandwich_check(flat, np.zeros(3), base), PASS))
    foot = np.array([1.0, 0.0, 0.0])
    base_c = foot + np.array([[0.05 * np.cos(t), 0.12 * np.sin(2 * t), 0.05 * np.sin(t)]
                              for t in np.linspace(0, 2 * np.pi, 20, endpoint=False)])
    out.append((dfm.sandwich_check(circ, foot, base_c), PASS))
    out.append((dfm.sandwich_check(circ, foot, base_c, alpha=0.5), PASS))

    # 1-Lipschitz on sampled pairs
    worst = 0.0
    for e in (point, circ, sph):
        xs = rng.standard_normal((40, 3))
        ys = xs + 0.5 * rng.standard_normal((40, 3))
        for x, y in zip(xs, ys):
            lhs = abs(e.dist(x) - e.dist(y))
            worst = max(worst, lhs - np.linalg.norm(x - y))
    out.append((_report("distfield.lipschitz", worst <= 1e-12, worst=worst), PASS))
    return out


def _pucci_sample(p):
    prof = flm.pucci_radial_profile(3, 0.5)
    rbar = flm.pucci_radial_root(3, 0.5)
    u = flm.ScalarField(
        2, lambda x: prof.value(rbar * max(float(np.linalg.norm(x)), 1e-300)),
        singular_set=dfm.PointSet(np.zeros((1, 2))), name="pucci_radial")
    return mpm.SolutionSample.from_field(u, h=p["mp_h"])


def suite_movingplane(seed: int, p: dict, tol_scale: float):
    out = []
    u = flm.ScalarField(2, lambda x: 1.0 - float(x @ x), name="1-|x|^2")
    s = mpm.SolutionSample.from_field(u, h=p["mp_h"])
    rep = mpm.radial_symmetry_report(s, seed=seed)
    out.append((rep, PASS))

    s4 = mpm.SolutionSample.from_field(flm.example4_1d(), h=p["grid_1d"])
    rep4 = mpm.radial_symmetry_report(s4, seed=seed)
    ok4 = rep4.data["classification"] == mpm.ASYMMETRIC
    out.append((_report("movingplane.example4_classification", ok4,
                        classification=rep4.data["classification"]), PASS))

    s5 = mpm.SolutionSample.from_field(flm.example5_sin(1), h=p["grid_1d"])
    mono5 = mpm.monotonicity_check(s5, [1.0])
    out.append((mono5, FAIL))
    rep5 = mpm.radial_symmetry_report(s5, seed=seed)
    ok5 = rep5.data["classification"] == mpm.SYMMETRIC_NOT_MONOTONE
    out.append((_report("movingplane.example5_classification", ok5,
                        classification=rep5.data["classification"]), PASS))

    sp = _pucci_sample(p)
    repp = mpm.radial_symmetry_report(sp, seed=seed)
    okp = (repp.data["classification"] == mpm.SYMMETRIC_NOT_MONOTONE
           and repp.data["shell_spread"] <= 1e-9)
    out.append((_report("movingplane.extremal_radial_classification", okp,
                        classification=repp.data["classification"],
                        shell_spread=repp.data["shell_spread"]), PASS))
    return out


SUITES = {
    "kyfan": suite_kyfan,
    "examples": suite_examples,
    "superaffine": suite_superaffine,
    "barrier": suite_barrier,
    "slopes": suite_slopes,
    "abp": suite_abp,
    "distfield": suite_distfield,
    "movingplane": suite_movingplane,
}
SUITE_ORDER = ["examples", "kyfan", "superaffine", "barrier", "slopes", "abp",
               "distfield", "movingplane"]


# ------------------------------------------------------------------- main ----

def _parse_config(path: str) -> dict:
    cfg = {}
    try:
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = val
    except OSError as exc:
        raise ValueError(str(exc)) from exc
    return cfg


def _build_parser():
    ap = argparse.ArgumentParser(prog="degenlab",
                                 description="desk-scale verification battery")
    ap.add_argument("--config", help="key=value file; explicit flags win")
    sub = ap.add_subparsers(dest="command")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--grid-h", type=float, default=None)
    common.add_argument("--tol-scale", type=float, default=1.0)
    common.add_argument("--out", default=None, help="report directory")
    common.add_argument("--deterministic", action="store_true",
                        help="omit timings from reports")
    common.add_argument("--quick", action="store_true")
    for name in SUITE_ORDER:
        sp = sub.add_parser(name, parents=[common])
        if name == "examples":
            sp.add_argument("--n", type=int, default=None)
            sp.add_argument("--alpha", type=float, default=None)
        if name == "movingplane":
            sp.add_argument("--builtin", default=None)
            sp.add_argument("--csv", default=None,
                            help="write (lambda, min w) curves to this CSV file")
    allp = sub.add_parser("all", parents=[common])
    return ap


def _run_raw_movingplane(args) -> tuple:
    """Single-builtin scan: raw classification, no battery expectations."""
    name = args.builtin
    h = args.grid_h if args.grid_h else (1 / 128 if args.quick else 1 / 256)
    if name == "pucci_radial":
        sample = _pucci_sample(QUICK if args.quick else FULL)
    else:
        try:
            u = flm.builtin(name)
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2, []
        sample = mpm.SolutionSample.from_field(u, h=h)
    rep = mpm.radial_symmetry_report(sample, seed=args.seed)
    reports = [rep]
    if args.csv:
        import csv as _csv
        with open(args.csv, "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["direction", "lambda", "min_w"])
            for d in ([1.0], [-1.0]) if sample.grid.dim == 1 else ([1, 0], [0, 1]):
                scan = mpm.lambda_bar_scan(sample, d)
                for lam, mw in zip(scan.lambdas, scan.min_w):
                    w.writerow([repr(list(np.atleast_1d(d))), repr(float(lam)),
                                repr(float(mw))])
    code = 0 if rep.status == PASS else 1
    return code, reports


def _write_reports(reports, outdir: str | None, deterministic: bool):
    if outdir is None:
        return
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "reports.jsonl", "w") as fh:
        for rep in reports:
            fh.write(rep.to_json(deterministic=deterministic) + "\n")
    counts = {}
    for rep in reports:
        matched = rep.data.get("matched_expectation", rep.status == PASS)
        key = "ok" if matched else "mismatch"
        counts[key] = counts.get(key, 0) + 1
    summary = {"schema_version": "1", "checks": len(reports), **counts}
    if not deterministic:
        summary["written_at"] = time.time()
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1))


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.command is None:
        ap.print_usage()
        return 2
    if args.config:
        try:
            cfg = _parse_config(args.config)
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        for key, val in cfg.items():
            if not hasattr(args, key):
                continue
            current = getattr(args, key)
            default = ap.get_default(key) if hasattr(ap, "get_default") else None
            if current is None or current == default or current is False:
                cast = (lambda v: v.lower() == "true") if isinstance(current, bool) \
                    else (type(current) if current is not None else str)
                try:
                    setattr(args, key, cast(val))
                except ValueError:
                    print(f"config error: bad value for {key}: {val}", file=sys.stderr)
                    return 2

    if args.command == "movingplane" and getattr(args, "builtin", None):
        code, reports = _run_raw_movingplane(args)
        _write_reports(reports, args.out, args.deterministic)
        return code

    params = dict(QUICK if args.quick else FULL)
    if args.grid_h:
        params["grid_2d"] = args.grid_h
        params["abp_h"] = args.grid_h
        params["mp_h"] = args.grid_h
    suites = SUITE_ORDER if args.command == "all" else [args.command]
    reports = []
    any_mismatch = False
    any_inconclusive = False
    for name in suites:
        t0 = time.perf_counter()
        pairs = SUITES[name](args.seed, params, args.tol_scale)
        dt = time.perf_counter() - t0
        for rep, expected in pairs:
            matched = rep.status == expected
            rep.data["expected_status"] = expected
            rep.data["matched_expectation"] = bool(matched)
            rep.seed = args.seed if rep.seed is None else rep.seed
            if not matched:
                if rep.status == INCONCLUSIVE:
                    any_inconclusive = True
                else:
                    any_mismatch = True
            line = "ok  " if matched else "MISM"
            print(f"[{line}] {rep.check}: {rep.status} (expected {expected})")
            reports.append(rep)
        print(f"-- suite {name}: {len(pairs)} checks in {dt:.1f}s")
    _write_reports(reports, args.out, args.deterministic)
    if any_mismatch:
        return 1
    if any_inconclusive:
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

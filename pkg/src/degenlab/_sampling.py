"""Sphere sampling, quadrature and direction sets shared by the checkers."""

from __future__ import annotations

import numpy as np

from .errors import InputError

_GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


def sphere_points(n: int, r: float = 1.0, count: int = 10_000) -> np.ndarray:
    """Deterministic samples on the sphere of radius r.

    n=1: the two endpoints; n=2: equispaced angles; n=3: Fibonacci lattice.
    """
    if n == 1:
        return np.array([[-r], [r]])
    if n == 2:
        t = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return r * np.stack([np.cos(t), np.sin(t)], axis=1)
    if n == 3:
        i = np.arange(count)
        z = 1.0 - (2.0 * i + 1.0) / count
        phi = 2 * np.pi * i / _GOLDEN
        s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        return r * np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    raise InputError("sphere sampling implemented for n <= 3")


def sphere_min(fn, n: int, r: float, count: int = 10_000, refine: int = 4):
    """Minimum of fn over the sphere |x| = r: lattice scan plus local refinement.

    Returns (value, argmin point).  fn must accept a single point.
    """
    pts = sphere_points(n, r, count)
    vals = np.array([fn(p) for p in pts])
    i = int(np.argmin(vals))
    best_v, best_x = float(vals[i]), pts[i]
    if n == 1:
        return best_v, best_x
    # shrinking neighborhood search around the best sample
    rng = np.random.default_rng(12345)
    step = 2 * np.pi * r / count if n == 2 else 4.0 * r / np.sqrt(count)
    for _ in range(refine):
        cand = best_x + step * rng.standard_normal((64, n))
        cand = r * cand / np.linalg.norm(cand, axis=1)[:, None]
        cv = np.array([fn(p) for p in cand])
        j = int(np.argmin(cv))
        if cv[j] < best_v:
            best_v, best_x = float(cv[j]), cand[j]
        step *= 0.35
    return best_v, best_x


def sphere_average(fn, center, r: float, n: int, count: int = 256) -> float:
    """Surface average over the sphere of radius r about center.

    n=1: endpoint mean; n=2: trapezoid in angle; n=3: Gauss-Legendre in the
    polar cosine times uniform azimuth.
    """
    center = np.asarray(center, dtype=float)
    if n == 1:
        return 0.5 * (fn(center - r) + fn(center + r))
    if n == 2:
        t = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        pts = center + r * np.stack([np.cos(t), np.sin(t)], axis=1)
        return float(np.mean([fn(p) for p in pts]))
    if n == 3:
        m = max(8, int(np.sqrt(count)))
        z, wz = np.polynomial.legendre.leggauss(m)
        phi = np.linspace(0.0, 2 * np.pi, 2 * m, endpoint=False)
        total = 0.0
        for zi, wi in zip(z, wz):
            s = np.sqrt(max(0.0, 1.0 - zi * zi))
            ring = center + r * np.stack(
                [s * np.cos(phi), s * np.sin(phi), np.full_like(phi, zi)], axis=1)
            total += wi * np.mean([fn(p) for p in ring])
        return float(total / wz.sum())
    raise InputError("sphere average implemented for n <= 3")


def ball_average(fn, center, r: float, n: int, count: int = 256) -> float:
    """Volume average over the ball of radius r: radial Gauss-Legendre of
    sphere averages weighted by rho^{n-1}."""
    m = 12
    t, w = np.polynomial.legendre.leggauss(m)
    rho = 0.5 * r * (t + 1.0)
    wr = 0.5 * r * w
    num = sum(wi * rhoi ** (n - 1) * sphere_average(fn, center, rhoi, n, count)
              for rhoi, wi in zip(rho, wr))
    den = sum(wi * rhoi ** (n - 1) for rhoi, wi in zip(rho, wr))
    return float(num / den)


def direction_set(n: int, seed: int = 0) -> np.ndarray:
    """Scan directions: 1d +-e1; 2d 16 equal angles; 3d 26 lattice + 50 random."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    if n == 3:
        dirs = []
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                for k in (-1, 0, 1):
                    if (i, j, k) != (0, 0, 0):
                        v = np.array([i, j, k], dtype=float)
                        dirs.append(v / np.linalg.norm(v))
        rng = np.random.default_rng(seed)
        extra = rng.standard_normal((50, 3))
        extra /= np.linalg.norm(extra, axis=1)[:, None]
        return np.vstack([dirs, extra])
    raise InputError("direction sets implemented for n <= 3")

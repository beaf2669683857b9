"""Small dense symmetric-matrix algebra.

Eigendecomposition by cyclic Jacobi rotations (n <= 8), partial sums of the
smallest eigenvalues, the sampled Ky Fan frame minimum, the diagonal
perturbation inequality for eigenvalue sums, elementary symmetric polynomials
and Garding-cone membership, weighted extremal operators of Pucci type, and a
cone-openness probe.

Eigenvalues are always ordered ascending: lambda_1 <= ... <= lambda_n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolation, InputError
from .report import FAIL, PASS, CheckReport

MAX_DIM = 8
_JACOBI_TOL = 1e-14
_JACOBI_MAX_SWEEPS = 100

_TRIL = {n: np.tril_indices(n) for n in range(1, MAX_DIM + 1)}


@dataclass(frozen=True)
class SymMat:
    """Symmetric matrix in packed lower-triangle storage (1 <= n <= 8).

    Only one triangle is stored, so symmetry cannot be violated by
    construction.  ``entries[idx(i, j)] = M[i, j]`` for i >= j.
    """

    n: int
    entries: np.ndarray

    def __post_init__(self):
        if not (1 <= self.n <= MAX_DIM):
            raise InputError(f"dimension {self.n} outside 1..{MAX_DIM}")
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (self.n * (self.n + 1) // 2,):
            raise InputError(f"expected {self.n * (self.n + 1) // 2} packed entries")
        if not np.all(np.isfinite(e)):
            raise InputError("non-finite matrix entries")
        object.__setattr__(self, "entries", e)

    @staticmethod
    def from_full(m) -> "SymMat":
        m = np.asarray(m, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError("expected a square matrix")
        if not np.all(np.isfinite(m)):
            raise InputError("non-finite matrix entries")
        skew = float(np.abs(m - m.T).max())
        if skew > 1e-12 * max(1.0, float(np.abs(m).max())):
            raise InputError("matrix is not symmetric")
        n = m.shape[0]
        sym = 0.5 * (m + m.T)
        i, j = _TRIL[n] if n in _TRIL else np.tril_indices(n)
        return SymMat(n, sym[i, j])

    @staticmethod
    def diag(values) -> "SymMat":
        return SymMat.from_full(np.diag(np.asarray(values, dtype=float)))

    @staticmethod
    def zeros(n: int) -> "SymMat":
        return SymMat(n, np.zeros(n * (n + 1) // 2))

    @staticmethod
    def identity(n: int) -> "SymMat":
        return SymMat.from_full(np.eye(n))

    def full(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        i, j = _TRIL[self.n]
        m[i, j] = self.entries
        m[j, i] = self.entries
        return m

    def __add__(self, other):
        other = as_symmat(other)
        if other.n != self.n:
            raise InputError("dimension mismatch")
        return SymMat(self.n, self.entries + other.entries)

    def __sub__(self, other):
        other = as_symmat(other)
        if other.n != self.n:
            raise InputError("dimension mismatch")
        return SymMat(self.n, self.entries - other.entries)

    def __mul__(self, c):
        return SymMat(self.n, self.entries * float(c))

    __rmul__ = __mul__

    def trace(self) -> float:
        idx = np.cumsum(np.arange(1, self.n + 1)) - 1  # diagonal slots in packed order
        return float(self.entries[idx].sum())


def as_symmat(m) -> SymMat:
    """Accept a SymMat or anything convertible to a full symmetric matrix."""
    if isinstance(m, SymMat):
        return m
    return SymMat.from_full(m)


@dataclass(frozen=True)
class EigenDecomp:
    """Eigenvalues sorted ascending plus an orthonormal column frame."""

    eigenvalues: np.ndarray
    frame: np.ndarray

    def __iter__(self):
        return iter((self.eigenvalues, self.frame))


def eigh(m) -> EigenDecomp:
    """Eigendecomposition by cyclic Jacobi rotations.

    Threshold 1e-14 relative to the Frobenius norm, at most 100 sweeps;
    plenty for n <= 8.
    """
    m = as_symmat(m)
    a = m.full()
    n = m.n
    v = np.eye(n)
    if n == 1:
        return EigenDecomp(a[0].copy(), v)
    scale = max(1.0, float(np.linalg.norm(a)))
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(max(0.0, (a * a).sum() - (np.diag(a) ** 2).sum()))
        if off <= _JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 0.1 * _JACOBI_TOL * scale / (n * n):
                    continue
                # classical Jacobi rotation annihilating a[p, q]
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return EigenDecomp(w[order], v[:, order])


def eigenvalues(m) -> np.ndarray:
    return eigh(m).eigenvalues


def partial_sum(m, k: int) -> float:
    """Sum of the k smallest eigenvalues."""
    m = as_symmat(m)
    if not (1 <= k <= m.n):
        raise InputError(f"k={k} outside 1..{m.n}")
    return float(eigenvalues(m)[:k].sum())


def weighted_partial_sum(m, weights) -> float:
    """sum_i weights[i] * lambda_i over the len(weights) smallest eigenvalues."""
    m = as_symmat(m)
    w = np.asarray(weights, dtype=float)
    if not (1 <= w.size <= m.n):
        raise InputError("weight vector length outside 1..n")
    return float(np.dot(w, eigenvalues(m)[: w.size]))


def random_frame(n: int, k: int, rng) -> np.ndarray:
    """Random orthonormal k-frame: Gram-Schmidt (QR) on a Gaussian sample."""
    g = rng.standard_normal((n, k))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diag(r))


def kyfan_sampled_min(m, k: int, trials: int, seed: int) -> float:
    """Minimum of sum_i eps_i^T M eps_i over random orthonormal k-frames.

    Always also evaluates the eigenvector frame, where the minimum is
    attained, so the result never exceeds partial_sum(m, k) by more than
    roundoff and never undershoots it beyond 1e-9.
    """
    m = as_symmat(m)
    if not (1 <= k <= m.n):
        raise InputError(f"k={k} outside 1..{m.n}")
    if trials < 1:
        raise InputError("trials must be >= 1")
    a = m.full()
    dec = eigh(m)
    frame = dec.frame[:, :k]
    best = float(np.einsum("ij,ik,kj->", frame, a, frame))
    rng = np.random.default_rng(seed)
    # batched: stack Gaussian samples, QR them all at once
    batch = 512
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        g = rng.standard_normal((b, m.n, k))
        q, _ = np.linalg.qr(g)
        vals = np.einsum("bij,ik,bkj->b", q, a, q)
        best = min(best, float(vals.min()))
        done += b
    return best


def perturbation_inequality_check(m, deltas, l: int, tol: float = 1e-9) -> CheckReport:
    """Diagonal perturbation inequality for partial eigenvalue sums.

    With D = diag(1, ..., 1, -delta_1, ..., -delta_k) (n-k ones) and
    0 < delta_i <= (l-k)/k, the sum of the l smallest eigenvalues cannot
    increase when passing from M to M - D.  A failure here is a bug, not data.
    """
    m = as_symmat(m)
    deltas = np.asarray(deltas, dtype=float)
    k = deltas.size
    n = m.n
    if k < 1:
        raise InputError("need at least one delta")
    if not (k < l <= n):
        raise HypothesisViolation(f"need k < l <= n, got k={k}, l={l}, n={n}")
    bound = (l - k) / k
    if np.any(deltas <= 0) or np.any(deltas > bound + 1e-15):
        raise HypothesisViolation(f"deltas must lie in (0, {bound}]")
    d = np.concatenate([np.ones(n - k), -deltas])
    lhs = partial_sum(m - SymMat.diag(d), l)
    rhs = partial_sum(m, l)
    violation = lhs - rhs
    return CheckReport(
        check="symmat.perturbation_inequality",
        status=PASS if violation <= tol else FAIL,
        params={"n": n, "k": k, "l": l, "deltas": deltas.tolist()},
        worst_violation=float(violation),
        tolerances={"tol": tol},
        data={"lhs": lhs, "rhs": rhs},
    )


def sigma_k(lam, k: int) -> float:
    """k-th elementary symmetric polynomial of the vector lam."""
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    if not (1 <= k <= n):
        raise InputError(f"k={k} outside 1..{n}")
    # coefficient recurrence; update high-to-low so each lambda enters once
    e = np.zeros(k + 1)
    e[0] = 1.0
    for x in lam:
        for j in range(min(k, n), 0, -1):
            e[j] += x * e[j - 1]
    return float(e[k])


def gamma_k_member(m, k: int, tol: float = 1e-12, closure: bool = False) -> bool:
    """Membership of lambda(M) in the Garding cone Gamma_k.

    Uses the classical equivalent characterization sigma_j(lambda) > 0 for
    all j = 1..k (>= -tol when testing the closure).
    """
    m = as_symmat(m)
    if not (1 <= k <= m.n):
        raise InputError(f"k={k} outside 1..{m.n}")
    lam = eigenvalues(m)
    for j in range(1, k + 1):
        s = sigma_k(lam, j)
        if closure:
            if s < -tol:
                return False
        elif s <= tol:
            return False
    return True


def pucci_plus(m, alpha: float) -> float:
    """Weighted extremal eigenvalue sum sum_i h(lambda_i) * lambda_i.

    h(s) = 1 for s >= 0 and (n-1)/(1-alpha) for s < 0, so negative curvature
    directions are amplified.  Uniformly elliptic and concave in M.
    """
    m = as_symmat(m)
    if not (0.0 < alpha < 1.0):
        raise InputError("alpha must lie in (0, 1)")
    lam = eigenvalues(m)
    wneg = (m.n - 1) / (1.0 - alpha)
    return float(np.where(lam >= 0, lam, wneg * lam).sum())


def property_pk_probe(k: int, l: int, m, eps: float, delta_bar: float, frame,
                      tol: float = 1e-12) -> bool:
    """Does M + eps*N stay in the cone U_l?

    N has eigenvalues (-delta_bar repeated k times, 1 repeated n-k times) in
    the supplied orthonormal frame.  M must lie in the closure of U_l.
    """
    m = as_symmat(m)
    n = m.n
    if eps <= 0 or delta_bar <= 0:
        raise InputError("eps and delta_bar must be positive")
    if not (1 <= l <= n) or not (1 <= k <= n - 1):
        raise InputError("need 1 <= l <= n and 1 <= k <= n-1")
    frame = np.asarray(frame, dtype=float)
    if frame.shape != (n, n) or not np.allclose(frame.T @ frame, np.eye(n), atol=1e-10):
        raise InputError("frame is not an orthonormal basis")
    if not gamma_k_member(m, l, tol=tol, closure=True):
        raise HypothesisViolation("M is not in the closure of U_l")
    diag = np.concatenate([-delta_bar * np.ones(k), np.ones(n - k)])
    nmat = SymMat.from_full(frame @ np.diag(diag) @ frame.T)
    return gamma_k_member(m + eps * nmat, l, tol=tol)

"""Discrete stochastic Fubini theorem.

A kernel ``phi(t; x)`` on ``[0,1]^2 x [0,1]^2`` is sampled at cell
midpoints into an ``n^2 x n^2`` matrix ``M`` (rows: t, columns: x).  The two
contractions are Gram matrices

    phi1 = h^2 M^T M   (integrate out t)
    phi2 = h^2 M M^T   (integrate out x; covariance of int phi(t; x) W(dx))

with ``h^2 = 1/n^2``.  As integral operators both carry a further quadrature
weight ``h^2``; ``fubini_check`` applies it.  Cumulants of the associated
quadratic functional are ``c_m tr(op^m)`` with ``c_m = 2^(m-1) (m-1)!``, the
cumulants of a centered chi-square weighted sum.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .kernels import midpoints
from .report import VerdictReport

TRACE_RTOL = 1e-12
EIG_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class Kernel4:
    n: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        side = self.n * self.n
        if v.shape != (side, side):
            raise ValueError(f"Kernel4 values must be {side}x{side}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("Kernel4 values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def weight(self) -> float:
        return 1.0 / (self.n * self.n)


@dataclass(frozen=True, eq=False)
class ContractionPair:
    phi1: np.ndarray
    phi2: np.ndarray


def contractions(phi: Kernel4) -> ContractionPair:
    M = phi.values
    h2 = phi.weight
    p1 = h2 * (M.T @ M)
    p2 = h2 * (M @ M.T)
    # exact symmetry; BLAS may differ in the last bit across triangles
    p1 = 0.5 * (p1 + p1.T)
    p2 = 0.5 * (p2 + p2.T)
    return ContractionPair(p1, p2)


def cm_coefficient(m: int) -> float:
    return 2.0 ** (m - 1) * math.factorial(m - 1)


def trace_power(A: np.ndarray, m: int) -> float:
    """tr(A^m) by repeated multiplication (m >= 1)."""
    if m < 1:
        raise ValueError("power must be >= 1")
    if m == 1:
        return float(np.trace(A))
    half = m // 2
    P = A
    for _ in range(half - 1):
        P = P @ A
    # tr(A^m) = <P, P'> with P = A^half, P' = A^(m-half)
    Q = P if m % 2 == 0 else P @ A
    return float(np.sum(P * Q.T))


def cumulant_m(mat: np.ndarray, m: int, weight: float = 1.0) -> float:
    """m-th cumulant of sum lam_k (xi_k^2 - 1), lam = eig(weight * mat)."""
    if m < 2:
        raise ValueError("cumulant order must be >= 2")
    A = np.asarray(mat, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("cumulant_m needs a square matrix")
    return cm_coefficient(m) * trace_power(weight * A, m)


def _nonzero_eigs(A: np.ndarray, scale: float) -> np.ndarray:
    w = np.sort(np.linalg.eigvalsh(A))[::-1]
    return w[w > EIG_RTOL * scale]


def fubini_check(phi: Kernel4, m_max: int = 6) -> VerdictReport:
    """Compare the trace sequences and nonzero spectra of the two contractions."""
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    pair = contractions(phi)
    h2 = phi.weight
    A1, A2 = h2 * pair.phi1, h2 * pair.phi2
    per_m = {}
    worst = 0.0
    for m in range(2, m_max + 1):
        t1, t2 = trace_power(A1, m), trace_power(A2, m)
        denom = max(abs(t1), abs(t2))
        gap = 0.0 if denom == 0.0 else abs(t1 - t2) / denom
        worst = max(worst, gap)
        per_m[str(m)] = {"trace_phi1": t1, "trace_phi2": t2, "rel_gap": gap,
                         "cumulant": cm_coefficient(m) * t2}
    scale = max(float(np.max(np.abs(A1))) if A1.size else 0.0, 0.0)
    top = max(np.linalg.norm(A1, 2), np.linalg.norm(A2, 2)) if scale > 0 else 0.0
    e1, e2 = _nonzero_eigs(A1, top), _nonzero_eigs(A2, top)
    if e1.size != e2.size:
        eig_gap = math.inf
    elif e1.size == 0:
        eig_gap = 0.0
    else:
        eig_gap = float(np.max(np.abs(e1 - e2))) / top
    ok = worst <= TRACE_RTOL and eig_gap <= EIG_RTOL
    return VerdictReport(
        "SFT", "cumulant", worst, TRACE_RTOL, ok,
        lhs_provenance="tr((h^2 phi1)^m), phi1 = h^2 M^T M",
        rhs_provenance="tr((h^2 phi2)^m), phi2 = h^2 M M^T",
        n=phi.n,
        details={"per_m": per_m, "eig_gap": eig_gap, "eig_threshold": EIG_RTOL,
                 "nonzero_counts": [int(e1.size), int(e2.size)]},
    )


def report_json(rep: VerdictReport) -> str:
    return json.dumps(rep.to_dict(), sort_keys=True, indent=1)


def corollary2_phi(which: int, t, x) -> np.ndarray:
    """The kernels phi^(1..4)(t1, t2; x1, x2) whose Wiener integrals give
    the bivariate bridge, tied-down bridge, Kiefer-1 and Kiefer-2 fields."""
    t1, t2 = (np.asarray(v, dtype=float) for v in t)
    x1, x2 = (np.asarray(v, dtype=float) for v in x)
    i1 = (x1 <= t1).astype(float)
    i2 = (x2 <= t2).astype(float)
    if which == 1:
        return i1 * i2 - t1 * t2
    if which == 2:
        return i1 * i2 - t1 * i2 - t2 * i1 + t1 * t2
    if which == 3:
        return i1 * i2 - t1 * i2
    if which == 4:
        return i1 * i2 - t2 * i1
    raise ValueError("which must be 1, 2, 3 or 4")


def corollary2_kernel(which: int, n: int) -> Kernel4:
    if which not in (1, 2, 3, 4):
        raise ValueError("which must be 1, 2, 3 or 4")
    g = midpoints(n)
    a, b = np.meshgrid(g, g, indexing="ij")
    p1, p2 = a.ravel(), b.ravel()  # row-major in the first coordinate
    vals = corollary2_phi(which, (p1[:, None], p2[:, None]), (p1[None, :], p2[None, :]))
    return Kernel4(n, vals)


def random_kernel4(n: int, seed: int) -> Kernel4:
    from . import rng

    g = rng.generator(seed, "kernel4")
    return Kernel4(n, g.standard_normal((n * n, n * n)))

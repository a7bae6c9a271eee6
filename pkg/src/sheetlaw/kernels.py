"""Covariance kernels of the Brownian sheet family and their centered versions.

Every 2-D kernel is stored as a short sum of products of 1-D factor kernels
(``min``, ``bridge`` and the rank-one ``prod`` kernel ``t*s``).  Centering in
one coordinate only touches the matching factor, so row/column/double
centering keeps a separable kernel separable.  Full-mean centering is kept
as a flag and applied in closed form on top of the factor sum.

All centering corrections are polynomial and evaluated analytically.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class ProcessKind(str, enum.Enum):
    SHEET = "sheet"
    BRIDGE_B = "bridge_b"
    TIED_DOWN_B0 = "b0"
    KIEFER1 = "kiefer1"
    KIEFER2 = "kiefer2"
    WIENER_1D = "wiener"
    BRIDGE_1D = "bridge"
    CENTERED_WIENER_1D = "centered_wiener"

    @property
    def dim(self) -> int:
        return 1 if self in _ONE_D else 2


_ONE_D = {ProcessKind.WIENER_1D, ProcessKind.BRIDGE_1D, ProcessKind.CENTERED_WIENER_1D}


class CenteringKind(str, enum.Enum):
    """How the path is centered before squaring.

    ``ROW_MEAN`` subtracts the average over the second coordinate
    (``F(t1, t2) - int F(t1, u) du``); ``COL_MEAN`` subtracts the average
    over the first coordinate.  ``DOUBLE_MEAN`` is row + column - full.
    """

    NONE = "none"
    FULL_MEAN = "full"
    ROW_MEAN = "row"
    COL_MEAN = "col"
    DOUBLE_MEAN = "double"


@dataclass(frozen=True)
class Point2:
    t1: float
    t2: float = 0.0

    def __post_init__(self):
        for v in (self.t1, self.t2):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"coordinates must lie in [0, 1], got {self}")


# ---------------------------------------------------------------------------
# 1-D factor kernels
# ---------------------------------------------------------------------------

# (row integral m(t) = int_0^1 k(t,u) du, total M = int int k, trace int k(t,t))
_FACTOR_MOMENTS = {
    "min": (lambda t: t - 0.5 * t * t, 1.0 / 3.0, 0.5),
    "bridge": (lambda t: 0.5 * t * (1.0 - t), 1.0 / 12.0, 1.0 / 6.0),
    "prod": (lambda t: 0.5 * t, 0.25, 1.0 / 3.0),
}


@dataclass(frozen=True)
class Factor:
    """A 1-D covariance factor on [0,1], optionally mean-centered."""

    base: str
    centered: bool = False

    def __post_init__(self):
        if self.base not in _FACTOR_MOMENTS:
            raise ValueError(f"unknown factor {self.base!r}")

    def _raw(self, t, s):
        if self.base == "min":
            return np.minimum(t, s)
        if self.base == "bridge":
            # product form is exactly 0 on the boundary, never -eps
            return np.minimum(t, s) * (1.0 - np.maximum(t, s))
        return t * s

    def __call__(self, t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        k = self._raw(t, s)
        if self.centered:
            m, total, _ = _FACTOR_MOMENTS[self.base]
            k = k - (m(t) + m(s)) + total
        return k

    def row_integral(self, t):
        t = np.asarray(t, dtype=float)
        if self.centered:
            return np.zeros_like(t)
        return _FACTOR_MOMENTS[self.base][0](t)

    @property
    def total(self) -> float:
        return 0.0 if self.centered else _FACTOR_MOMENTS[self.base][1]

    @property
    def trace(self) -> float:
        _, total, tr = _FACTOR_MOMENTS[self.base]
        return tr - total if self.centered else tr

    def gram(self, nodes: np.ndarray) -> np.ndarray:
        return self(nodes[:, None], nodes[None, :])

    def with_centering(self, flag: bool) -> "Factor":
        if flag and self.centered:
            raise ValueError("factor is already centered")
        return Factor(self.base, self.centered or flag)


_MIN, _BRIDGE, _PROD = Factor("min"), Factor("bridge"), Factor("prod")

# (coefficient, factor for t1, factor for t2 or None)
_BASE_TERMS = {
    ProcessKind.SHEET: ((1.0, _MIN, _MIN),),
    ProcessKind.BRIDGE_B: ((1.0, _MIN, _MIN), (-1.0, _PROD, _PROD)),
    ProcessKind.TIED_DOWN_B0: ((1.0, _BRIDGE, _BRIDGE),),
    ProcessKind.KIEFER1: ((1.0, _BRIDGE, _MIN),),
    ProcessKind.KIEFER2: ((1.0, _MIN, _BRIDGE),),
    ProcessKind.WIENER_1D: ((1.0, _MIN, None),),
    ProcessKind.BRIDGE_1D: ((1.0, _BRIDGE, None),),
    ProcessKind.CENTERED_WIENER_1D: ((1.0, Factor("min", True), None),),
}


@dataclass(frozen=True)
class CovKernel:
    """Covariance function of a (possibly centered) process of the family.

    Instances are immutable and hashable, so they double as cache keys for
    spectra.
    """

    kind: ProcessKind
    centering: CenteringKind = CenteringKind.NONE

    def __post_init__(self):
        object.__setattr__(self, "kind", ProcessKind(self.kind))
        object.__setattr__(self, "centering", CenteringKind(self.centering))
        if self.dim == 1 and self.centering not in (CenteringKind.NONE, CenteringKind.FULL_MEAN):
            raise ValueError(f"{self.centering.value} centering needs a 2-D kernel")

    @property
    def dim(self) -> int:
        return self.kind.dim

    @cached_property
    def terms(self):
        c = self.centering
        c1 = c in (CenteringKind.COL_MEAN, CenteringKind.DOUBLE_MEAN)
        c2 = c in (CenteringKind.ROW_MEAN, CenteringKind.DOUBLE_MEAN)
        if self.dim == 1:
            c1 = c is CenteringKind.FULL_MEAN and not _BASE_TERMS[self.kind][0][1].centered
        out = []
        for coef, f1, f2 in _BASE_TERMS[self.kind]:
            g1 = f1.with_centering(c1) if c1 else f1
            g2 = None if f2 is None else (f2.with_centering(c2) if c2 else f2)
            out.append((coef, g1, g2))
        return tuple(out)

    @property
    def full_mean(self) -> bool:
        return self.dim == 2 and self.centering is CenteringKind.FULL_MEAN

    @property
    def separable(self) -> bool:
        return len(self.terms) == 1 and not self.full_mean

    @property
    def factors(self) -> tuple[Factor, Factor | None]:
        if not self.separable:
            raise ValueError(f"{self} is not separable")
        _, f1, f2 = self.terms[0]
        return f1, f2

    # -- pieces used by the full-mean correction --------------------------
    def _terms_eval(self, t1, t2, s1, s2):
        k = 0.0
        for coef, f1, f2 in self.terms:
            part = f1(t1, s1)
            if f2 is not None:
                part = part * f2(t2, s2)
            k = k + coef * part
        return k

    def _mean_fn(self, t1, t2):
        return sum(coef * f1.row_integral(t1) * f2.row_integral(t2) for coef, f1, f2 in self.terms)

    def _total(self) -> float:
        return sum(coef * f1.total * f2.total for coef, f1, f2 in self.terms)

    def __call__(self, p, q):
        """Vectorised evaluation; 2-D points carry a trailing axis of length 2,
        1-D kernels take plain arrays of coordinates."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if self.dim == 1:
            return self._terms_eval(p, None, q, None)
        if p.ndim == 0 or p.shape[-1] != 2 or q.ndim == 0 or q.shape[-1] != 2:
            raise ValueError("2-D kernel needs points with two coordinates")
        t1, t2, s1, s2 = p[..., 0], p[..., 1], q[..., 0], q[..., 1]
        k = self._terms_eval(t1, t2, s1, s2)
        if self.full_mean:
            k = k - (self._mean_fn(t1, t2) + self._mean_fn(s1, s2)) + self._total()
        return k

    @property
    def trace(self) -> float:
        """Closed-form trace of the integral operator (= E of the quadratic functional)."""
        tr = 0.0
        for coef, f1, f2 in self.terms:
            tr += coef * f1.trace * (1.0 if f2 is None else f2.trace)
        if self.full_mean:
            tr -= self._total()
        return tr

    def gram(self, n: int) -> np.ndarray:
        """Kernel matrix on the n (1-D) or n*n (2-D, row-major in t1) midpoint grid."""
        nodes = midpoints(n)
        if self.dim == 1:
            return self.terms[0][1].gram(nodes)
        K = None
        for coef, f1, f2 in self.terms:
            part = np.kron(f1.gram(nodes), f2.gram(nodes))
            if coef != 1.0:
                part *= coef
            if K is None:
                K = part
            else:
                K += part
        if self.full_mean:
            m = sum(coef * np.kron(f1.row_integral(nodes), f2.row_integral(nodes)) for coef, f1, f2 in self.terms)
            K -= m[:, None]
            K -= m[None, :]
            K += self._total()
        return K

    def label(self) -> str:
        return f"{self.kind.value}/{self.centering.value}"


def midpoints(n: int) -> np.ndarray:
    return (np.arange(n) + 0.5) / n


def make_kernel(kind, centering=CenteringKind.NONE) -> CovKernel:
    return CovKernel(ProcessKind(kind), CenteringKind(centering))


def centered_kernel(base: CovKernel, c: CenteringKind) -> CovKernel:
    c = CenteringKind(c)
    if c is CenteringKind.NONE:
        return base
    if base.centering is not CenteringKind.NONE:
        raise ValueError(f"{base.label()} is already centered")
    return CovKernel(base.kind, c)


def _as_coords(p, dim):
    if isinstance(p, Point2):
        arr = np.array([p.t1, p.t2])
    else:
        arr = np.atleast_1d(np.asarray(p, dtype=float))
        if arr.ndim != 1 or arr.shape[0] not in (1, 2) or (dim == 2 and arr.shape[0] != 2):
            raise ValueError(f"expected a {dim}-D point, got {p!r}")
        if np.any(arr < 0) or np.any(arr > 1):
            raise ValueError(f"point {p!r} outside [0,1]")
    # 1-D kernels ignore t2
    return arr if dim == 2 else arr[0]


def eval_kernel(kernel: CovKernel, p, q) -> float:
    pp = _as_coords(p, kernel.dim)
    qq = _as_coords(q, kernel.dim)
    return float(kernel(pp, qq))


def projected_cov_1d(s: float, t: float, left: str, right: str, factor: Factor = _BRIDGE) -> float:
    """Cov(P f(s), Q f(t)) for the reflection projections P, Q in {"S", "A"}.

    S f(x) = (f(x) + f(1-x))/2, A f(x) = (f(x) - f(1-x))/2.
    """
    sl = 1.0 if left == "S" else -1.0
    sr = 1.0 if right == "S" else -1.0
    k = factor
    return 0.25 * float(k(s, t) + sr * k(s, 1 - t) + sl * k(1 - s, t) + sl * sr * k(1 - s, 1 - t))


def cross_cov_sym_antisym(s: float, t: float) -> float:
    """Cov(A b(s), S b(t)) for a standard bridge; identically zero."""
    return projected_cov_1d(s, t, "A", "S")

"""Karhunen-Loeve spectra of covariance operators and the Laplace transforms
of the associated quadratic functionals.

A centered Gaussian path X with covariance operator of eigenvalues
``lam_k`` satisfies ``int X^2 = sum lam_k xi_k^2`` in law, hence
``E exp(-u^2/2 int X^2) = prod (1 + u^2 lam_k)^(-1/2)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg
from scipy.special import zeta

from . import rng
from .kernels import CovKernel, ProcessKind

CLAMP_RTOL = 1e-10
DEFAULT_TENSOR_CUTOFF = 2000
DEFAULT_TENSOR_KEEP = 100_000


class SpectrumError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigs: np.ndarray
    source: str
    trace_tail: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.asarray(self.eigs, dtype=float).ravel()
        if e.size and not np.all(np.isfinite(e)):
            raise ValueError("eigenvalues must be finite")
        e = np.sort(e)[::-1]
        if e.size and e[-1] < 0:
            top = max(e[0], 0.0)
            if e[-1] < -CLAMP_RTOL * top - 1e-300 and top > 0:
                raise ValueError(f"negative eigenvalue {e[-1]:.3e} beyond clamp threshold")
            e = np.maximum(e, 0.0)
        e.setflags(write=False)
        object.__setattr__(self, "eigs", e)
        if self.trace_tail < 0:
            raise ValueError("trace_tail must be nonnegative")

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigs)) + self.trace_tail

    def __len__(self):
        return self.eigs.size

    def scaled(self, c: float) -> "Spectrum":
        return Spectrum(self.eigs * c, f"{c:g}*{self.source}", self.trace_tail * c, dict(self.meta))

    def to_json(self) -> str:
        from . import __version__

        doc = {"source": self.source, "trace_tail": self.trace_tail, "meta": self.meta,
               "version": __version__, "eigenvalues": self.eigs.tolist()}
        return json.dumps(doc, sort_keys=True)

    def to_csv(self) -> str:
        from . import __version__

        lines = [f"# source={self.source},trace_tail={self.trace_tail!r},version={__version__}", "rank,eigenvalue"]
        lines += [f"{k + 1},{v!r}" for k, v in enumerate(self.eigs.tolist())]
        return "\n".join(lines) + "\n"


def union(*spectra: Spectrum) -> Spectrum:
    """Spectrum of a sum of independent quadratic functionals."""
    eigs = np.concatenate([s.eigs for s in spectra])
    return Spectrum(eigs, "union(" + ",".join(s.source for s in spectra) + ")",
                    sum(s.trace_tail for s in spectra))


def _clamp(w: np.ndarray) -> tuple[np.ndarray, int]:
    w = np.sort(w)[::-1]
    top = w[0] if w.size else 0.0
    eps = CLAMP_RTOL * max(top, 0.0)
    bad = w < -eps
    if np.any(bad):
        raise SpectrumError(f"eigenvalue {w[bad][0]:.3e} below -{eps:.1e}: kernel not PSD")
    clamped = int(np.count_nonzero(w < 0))
    return np.maximum(w, 0.0), clamped


@lru_cache(maxsize=64)
def _grid_eigs(kernel: CovKernel, n: int, method: str) -> tuple[np.ndarray, float, int]:
    dim = kernel.dim
    w_grid = 1.0 / n**dim
    try:
        if dim == 2 and kernel.separable and method == "auto":
            f1, f2 = kernel.factors
            from .kernels import midpoints

            nodes = midpoints(n)
            a = linalg.eigh(f1.gram(nodes) / n, eigvals_only=True)
            b = linalg.eigh(f2.gram(nodes) / n, eigvals_only=True)
            w = np.outer(a, b).ravel()
            diag_trace = float(np.sum(np.diag(f1.gram(nodes))) * np.sum(np.diag(f2.gram(nodes)))) * w_grid
        else:
            K = kernel.gram(n)
            K *= w_grid
            diag_trace = float(np.trace(K))
            w = linalg.eigh(K, eigvals_only=True, overwrite_a=True, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SpectrumError(f"eigensolver failed for {kernel.label()} at n={n}: {exc}") from exc
    w, clamped = _clamp(w)
    w.setflags(write=False)
    return w, diag_trace, clamped


def grid_spectrum(kernel: CovKernel, n: int, method: str = "auto") -> Spectrum:
    """Nystrom spectrum on the midpoint grid with uniform weights.

    ``method="auto"`` diagonalises separable 2-D kernels factor by factor (the
    Kronecker eigenvalues are the same multiset as the dense n^2 x n^2
    problem); ``"dense"`` always builds the full matrix.
    """
    if n < 2:
        raise ValueError("grid resolution must be at least 2")
    if method not in ("auto", "dense"):
        raise ValueError(method)
    w, diag_trace, clamped = _grid_eigs(kernel, n, method)
    return Spectrum(w, f"grid({kernel.label()},n={n})", 0.0,
                    {"n": n, "kernel": kernel.label(), "grid_trace": diag_trace, "clamped": clamped,
                     "method": method})


def analytic_spectrum(kind: ProcessKind, count: int) -> Spectrum:
    kind = ProcessKind(kind)
    if count < 1:
        raise ValueError("count must be >= 1")
    j = np.arange(1, count + 1, dtype=float)
    if kind in (ProcessKind.BRIDGE_1D, ProcessKind.CENTERED_WIENER_1D):
        eigs = 1.0 / (j * np.pi) ** 2
        tail = float(zeta(2, count + 1)) / np.pi**2
    elif kind is ProcessKind.WIENER_1D:
        eigs = 1.0 / ((j - 0.5) * np.pi) ** 2
        tail = float(zeta(2, count + 0.5)) / np.pi**2
    else:
        raise ValueError(f"no analytic spectrum for {kind.value}")
    return Spectrum(eigs, f"analytic({kind.value},{count})", tail, {"count": count})


def tensor_spectrum(s1: Spectrum, s2: Spectrum, cutoff: int = DEFAULT_TENSOR_CUTOFF,
                    keep: int = DEFAULT_TENSOR_KEEP) -> Spectrum:
    """All products lam_i * mu_j with i, j <= cutoff, truncated to the top ``keep``.

    Discarded mass (beyond the cutoff, beyond ``keep``, and the factor tails)
    goes into ``trace_tail``.
    """
    if len(s1) == 0 or len(s2) == 0:
        raise ValueError("tensor of an empty spectrum")
    a, b = s1.eigs[:cutoff], s2.eigs[:cutoff]
    prods = np.outer(a, b).ravel()
    full = s1.trace * s2.trace
    kept_sum = float(np.sum(a)) * float(np.sum(b))
    if prods.size > keep:
        idx = np.argpartition(prods, prods.size - keep)[prods.size - keep:]
        top = prods[idx]
        kept_sum = float(np.sum(top))
        prods = top
    tail = max(full - kept_sum, 0.0)
    return Spectrum(prods, f"tensor({s1.source},{s2.source})", tail,
                    {"cutoff": cutoff, "keep": keep})


def log_laplace(s: Spectrum, u: float) -> float:
    u2 = float(u) * float(u)
    return -0.5 * float(np.sum(np.log1p(u2 * s.eigs))) - 0.5 * u2 * s.trace_tail


def laplace_from_spectrum(s: Spectrum, u: float) -> float:
    """E exp(-u^2/2 * Q) for Q = sum lam_k xi_k^2; the tail enters at first order."""
    return float(np.exp(log_laplace(s, u)))


KL_EXACT_TERMS = 4096


def kl_samples(s: Spectrum, seed: int, count: int, stream: str = "kl", start: int = 0) -> np.ndarray:
    """Draws of sum lam_k xi_k^2.

    The leading ``KL_EXACT_TERMS`` eigenvalues are sampled exactly; the
    remaining ones (and the trace tail) contribute their mean plus a Gaussian
    with the matching variance ``2 sum lam^2``.
    """
    head = s.eigs[:KL_EXACT_TERMS]
    rest = s.eigs[KL_EXACT_TERMS:]
    rest_mean = float(np.sum(rest)) + s.trace_tail
    rest_sd = float(np.sqrt(2.0 * np.sum(rest * rest)))
    out = np.empty(count)
    for k in range(count):
        g = rng.generator(seed, stream, start + k)
        z = g.standard_normal(head.size + 1)
        out[k] = float(np.dot(head, z[:-1] ** 2)) + rest_mean + rest_sd * z[-1]
    return out


def kl_sample(s: Spectrum, seed: int, index: int = 0, stream: str = "kl") -> float:
    return float(kl_samples(s, seed, 1, stream, index)[0])

"""Batch kernels for the Monte Carlo field pipeline.

Two interchangeable implementations: numba ``@njit`` loops (default when
numba imports) and vectorised numpy.  ``SHEETLAW_DISABLE_NUMBA=1`` forces the
numpy path.  All functions take a leading batch axis.

Process codes: 0 sheet, 1 bivariate bridge, 2 tied-down bridge, 3 Kiefer-1,
4 Kiefer-2.  Centering codes: 0 none, 1 full, 2 row (mean over 2nd axis),
3 column (mean over 1st axis), 4 double.
"""
from __future__ import annotations

import contextlib
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
_disabled = os.environ.get("SHEETLAW_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")
BACKEND = "numba" if HAVE_NUMBA and not _disabled else "numpy"


@contextlib.contextmanager
def use_backend(name: str):
    global BACKEND
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    old, BACKEND = BACKEND, name
    try:
        yield
    finally:
        BACKEND = old


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_sheet(z):
    n = z.shape[-1]
    return np.cumsum(np.cumsum(z, axis=1), axis=2) / n


def _np_path(z):
    return np.cumsum(z, axis=1) / np.sqrt(z.shape[-1])


def _np_derive(W, code):
    n = W.shape[-1]
    t = np.arange(1, n + 1) / n
    t1 = t[None, :, None]
    t2 = t[None, None, :]
    top = W[:, -1:, :]   # W(1, t2)
    right = W[:, :, -1:]  # W(t1, 1)
    corner = W[:, -1:, -1:]
    if code == 0:
        return W.copy()
    if code == 1:
        return W - t1 * t2 * corner
    if code == 2:
        return W - t1 * top - t2 * right + t1 * t2 * corner
    if code == 3:
        return W - t1 * top
    if code == 4:
        return W - t2 * right
    raise ValueError(code)


def _np_center(F, code):
    if code == 0:
        return F
    if code == 1:
        return F - F.mean(axis=(1, 2), keepdims=True)
    if code == 2:
        return F - F.mean(axis=2, keepdims=True)
    if code == 3:
        return F - F.mean(axis=1, keepdims=True)
    if code == 4:
        return (F - F.mean(axis=2, keepdims=True) - F.mean(axis=1, keepdims=True)
                + F.mean(axis=(1, 2), keepdims=True))
    raise ValueError(code)


def _np_quad(F, code):
    G = _np_center(F, code)
    b, n, m = G.shape
    return np.sum((G * G).reshape(b, n * m), axis=1) / (n * m)


def _np_reflect(F, s1, s2):
    G = F
    if s1:
        G = 0.5 * (G + s1 * G[:, ::-1, :])
    if s2:
        G = 0.5 * (G + s2 * G[:, :, ::-1])
    return np.ascontiguousarray(G)


def _np_quarter(F):
    b, n, _ = F.shape
    h = n // 2
    Q = F[:, :h, :h]
    return np.sum((Q * Q).reshape(b, h * h), axis=1) / (n * n)


def _np_quad_1d(x, centered):
    if centered:
        x = x - x.mean(axis=1, keepdims=True)
    return np.sum(x * x, axis=1) / x.shape[1]


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    njit = numba.njit(cache=True, nogil=True)

    @njit
    def _nb_sheet(z):
        b, n, _ = z.shape
        out = np.empty_like(z)
        inv = 1.0 / n
        for k in range(b):
            for i in range(n):
                row = 0.0
                for j in range(n):
                    row += z[k, i, j]
                    above = out[k, i - 1, j] if i > 0 else 0.0
                    out[k, i, j] = above + row * inv
        return out

    @njit
    def _nb_path(z):
        b, n = z.shape
        out = np.empty_like(z)
        inv = 1.0 / np.sqrt(n)
        for k in range(b):
            acc = 0.0
            for i in range(n):
                acc += z[k, i]
                out[k, i] = acc * inv
        return out

    @njit
    def _nb_derive(W, code):
        b, n, _ = W.shape
        out = np.empty_like(W)
        for k in range(b):
            c = W[k, n - 1, n - 1]
            for i in range(n):
                t1 = (i + 1) / n
                r = W[k, i, n - 1]
                for j in range(n):
                    t2 = (j + 1) / n
                    w = W[k, i, j]
                    top = W[k, n - 1, j]
                    if code == 0:
                        v = w
                    elif code == 1:
                        v = w - t1 * t2 * c
                    elif code == 2:
                        v = w - t1 * top - t2 * r + t1 * t2 * c
                    elif code == 3:
                        v = w - t1 * top
                    else:
                        v = w - t2 * r
                    out[k, i, j] = v
        return out

    @njit
    def _nb_quad(F, code):
        b, n, m = F.shape
        out = np.empty(b)
        rmean = np.empty(n)
        cmean = np.empty(m)
        for k in range(b):
            tot = 0.0
            for i in range(n):
                rmean[i] = 0.0
            for j in range(m):
                cmean[j] = 0.0
            for i in range(n):
                for j in range(m):
                    v = F[k, i, j]
                    rmean[i] += v
                    cmean[j] += v
                    tot += v
            for i in range(n):
                rmean[i] /= m
            for j in range(m):
                cmean[j] /= n
            tot /= n * m
            acc = 0.0
            for i in range(n):
                for j in range(m):
                    v = F[k, i, j]
                    if code == 1:
                        v -= tot
                    elif code == 2:
                        v -= rmean[i]
                    elif code == 3:
                        v -= cmean[j]
                    elif code == 4:
                        v = v - rmean[i] - cmean[j] + tot
                    acc += v * v
            out[k] = acc / (n * m)
        return out

    @njit
    def _nb_reflect(F, s1, s2):
        b, n, m = F.shape
        out = np.empty_like(F)
        w1 = 0.5 if s1 != 0 else 1.0
        w2 = 0.5 if s2 != 0 else 1.0
        for k in range(b):
            for i in range(n):
                ii = n - 1 - i
                for j in range(m):
                    jj = m - 1 - j
                    v = F[k, i, j]
                    if s1 != 0:
                        v += s1 * F[k, ii, j]
                    if s2 != 0:
                        v += s2 * F[k, i, jj]
                        if s1 != 0:
                            v += s1 * s2 * F[k, ii, jj]
                    out[k, i, j] = w1 * w2 * v
        return out

    @njit
    def _nb_quarter(F):
        b, n, _ = F.shape
        h = n // 2
        out = np.empty(b)
        for k in range(b):
            acc = 0.0
            for i in range(h):
                for j in range(h):
                    acc += F[k, i, j] * F[k, i, j]
            out[k] = acc / (n * n)
        return out

    @njit
    def _nb_quad_1d(x, centered):
        b, n = x.shape
        out = np.empty(b)
        for k in range(b):
            mu = 0.0
            if centered:
                for i in range(n):
                    mu += x[k, i]
                mu /= n
            acc = 0.0
            for i in range(n):
                d = x[k, i] - mu
                acc += d * d
            out[k] = acc / n
        return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def sheet_from_normals(z):
    """Corner-lattice sheet values from standard normal cell increments."""
    z = _f64(z)
    return _nb_sheet(z) if BACKEND == "numba" else _np_sheet(z)


def path_from_normals(z):
    z = _f64(z)
    return _nb_path(z) if BACKEND == "numba" else _np_path(z)


def derive(W, code: int):
    W = _f64(W)
    return _nb_derive(W, int(code)) if BACKEND == "numba" else _np_derive(W, int(code))


def quad(F, code: int):
    F = _f64(F)
    return _nb_quad(F, int(code)) if BACKEND == "numba" else _np_quad(F, int(code))


def reflect(F, s1: int, s2: int):
    F = _f64(F)
    if BACKEND == "numba":
        return _nb_reflect(F, float(s1), float(s2))
    return _np_reflect(F, s1, s2)


def quarter_quad(F):
    F = _f64(F)
    return _nb_quarter(F) if BACKEND == "numba" else _np_quarter(F)


def quad_1d(x, centered: bool):
    x = _f64(x)
    return _nb_quad_1d(x, bool(centered)) if BACKEND == "numba" else _np_quad_1d(x, bool(centered))

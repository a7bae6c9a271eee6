"""Infinite cosh/sinh products, the tanh series, and the closed-form Laplace
transforms built from them.

Every product is accumulated in log space over ``N`` explicit factors; the
remaining factors are summed analytically from the Taylor expansion of the
log-factor, ``sum_k x_k^p`` being a Hurwitz zeta value.
"""
from __future__ import annotations

import enum
import math

import numpy as np
from scipy.special import zeta

MIN_TERMS = 64


class ProductId(str, enum.Enum):
    C = "C"
    C_ODD = "Codd"
    C_EVEN = "Ceven"
    S = "S"
    S_EVEN = "Seven"
    S_ODD = "Sodd"
    T_SERIES = "Tseries"


class TransformId(str, enum.Enum):
    PROP5_B = "Prop5_B"
    PROP5_B0 = "Prop5_B0"
    PROP5_K = "Prop5_K"
    THM6_I = "Thm6_I"
    THM6_J = "Thm6_J"
    THM6_Y = "Thm6_Y"


# factor k (k = 0, 1, ...) has argument a / ((step*k + start) * pi)
_LATTICE = {
    ProductId.C: (1, 1),
    ProductId.C_ODD: (2, 1),
    ProductId.C_EVEN: (2, 2),
    ProductId.S: (1, 1),
    ProductId.S_EVEN: (2, 2),
    ProductId.S_ODD: (2, 1),
    ProductId.T_SERIES: (2, 1),
}
_COSH = {ProductId.C, ProductId.C_ODD, ProductId.C_EVEN}

# log cosh x = x^2/2 - x^4/12 + x^6/45 - ...
_LOGCOSH_SERIES = ((2, 0.5), (4, -1.0 / 12.0), (6, 1.0 / 45.0))
# log(sinh x / x) = x^2/6 - x^4/180 + x^6/2835 - ...
_LOGSINHC_SERIES = ((2, 1.0 / 6.0), (4, -1.0 / 180.0), (6, 1.0 / 2835.0))


# (sinh x - x) / x = sum_k x^(2k) / (2k+1)!, k = 1..10; exact to round-off for x < 1
_SINHC_COEFFS = tuple(1.0 / math.factorial(2 * k + 1) for k in range(10, 0, -1))


def _log_cosh(x: np.ndarray) -> np.ndarray:
    x = np.abs(x)
    out = np.empty_like(x)
    small = x < 1.0
    # cosh x - 1 = 2 sinh(x/2)^2 avoids cancellation
    out[small] = np.log1p(2.0 * np.sinh(0.5 * x[small]) ** 2)
    xl = x[~small]
    out[~small] = xl + np.log1p(np.exp(-2.0 * xl)) - math.log(2.0)
    return out


def _log_sinhc(x: np.ndarray) -> np.ndarray:
    x = np.abs(x)
    out = np.empty_like(x)
    small = x < 1.0
    x2 = x[small] ** 2
    acc = np.zeros_like(x2)
    for c in _SINHC_COEFFS:
        acc = (acc + c) * x2
    out[small] = np.log1p(acc)
    xl = x[~small]
    # log(sinh x) = x + log1p(-exp(-2x)) - log 2
    out[~small] = xl + np.log1p(-np.exp(-2.0 * xl)) - math.log(2.0) - np.log(xl)
    return out


def _power_tail(p: int, step: int, start: int, first: int) -> float:
    """sum_{k >= first} 1 / ((step*k + start) * pi)^p."""
    return float(zeta(p, first + start / step)) / (step * math.pi) ** p


def _check_arg(a) -> float:
    a = float(a)
    if not math.isfinite(a):
        raise ValueError(f"argument must be finite, got {a}")
    return a


def _check_tol(tol: float):
    if not (0.0 < tol <= 1e-2):
        raise ValueError("tol must lie in (0, 1e-2]")


def _n_terms(a: float, step: int, tol: float) -> int:
    # first omitted argument small enough that the x^8 remainder is << tol
    x_max = 0.2 * tol ** 0.125
    return max(MIN_TERMS, int(math.ceil(abs(a) / (step * math.pi * x_max))) + 1)


def log_product(pid: ProductId, a: float, tol: float = 1e-12, terms: int | None = None) -> float:
    """Natural log of one of the cosh/sinh products."""
    pid = ProductId(pid)
    if pid is ProductId.T_SERIES:
        raise ValueError("the tanh series is a sum, not a product")
    a = _check_arg(a)
    _check_tol(tol)
    if a == 0.0:
        return 0.0
    step, start = _LATTICE[pid]
    N = terms if terms is not None else _n_terms(a, step, tol)
    k = np.arange(N, dtype=float)
    x = a / ((step * k + start) * math.pi)
    fn, series = (_log_cosh, _LOGCOSH_SERIES) if pid in _COSH else (_log_sinhc, _LOGSINHC_SERIES)
    head = math.fsum(fn(x))
    tail = sum(c * a**p * _power_tail(p, step, start, N) for p, c in series)
    return head + tail


def t_series(a: float, tol: float = 1e-12, terms: int | None = None) -> float:
    """T(a) = sum_{k>=0} tanh(2a/((2k+1)pi)) / ((2k+1)pi)."""
    a = _check_arg(a)
    _check_tol(tol)
    if a == 0.0:
        return 0.0
    N = terms if terms is not None else _n_terms(2.0 * a, 2, tol)
    d = (2.0 * np.arange(N) + 1.0) * math.pi
    head = math.fsum(np.tanh(2.0 * a / d) / d)
    # tanh y = y - y^3/3 + 2y^5/15, y = 2a/d; each term carries an extra 1/d
    tail = (2.0 * a * _power_tail(2, 2, 1, N)
            - (8.0 * a**3 / 3.0) * _power_tail(4, 2, 1, N)
            + (64.0 * a**5 / 15.0) * _power_tail(6, 2, 1, N))
    return head + tail


def eval_product(pid: ProductId, a: float, tol: float = 1e-12, terms: int | None = None) -> float:
    pid = ProductId(pid)
    if pid is ProductId.T_SERIES:
        return t_series(a, tol, terms)
    return math.exp(log_product(pid, a, tol, terms))


def _log_4t_over_u(u: float, tol: float) -> float:
    """log(4 T(u) / u), with its limit 0 at u = 0."""
    if abs(u) < 1e-6:
        return math.log1p(-u * u / 9.0)
    return math.log(4.0 * t_series(u, tol) / u)


def log_prop5(tid: TransformId, u: float, tol: float = 1e-12) -> float:
    tid = TransformId(tid)
    u = _check_arg(u)
    if tid is TransformId.PROP5_B:
        return -0.5 * (log_product(ProductId.C_ODD, 2.0 * u, tol) + _log_4t_over_u(u, tol))
    if tid is TransformId.PROP5_B0:
        return -0.5 * log_product(ProductId.S, u, tol)
    if tid is TransformId.PROP5_K:
        return -0.5 * log_product(ProductId.S_ODD, 2.0 * u, tol)
    raise ValueError(f"{tid.value} is not a Proposition-5 transform")


def prop5_laplace(tid: TransformId, u: float, tol: float = 1e-12) -> float:
    """E exp(-u^2/2 * Q) for Q the squared-norm functional of B, B0 or Kiefer-1."""
    return math.exp(log_prop5(tid, u, tol))


def log_thm6(tid: TransformId, u: float, tol: float = 1e-12) -> float:
    tid = TransformId(tid)
    u = _check_arg(u)
    if tid is TransformId.THM6_J:
        return -log_product(ProductId.S, u / 2.0, tol)
    if tid is TransformId.THM6_Y:
        return -2.0 * log_product(ProductId.S, u / 4.0, tol)
    if tid is TransformId.THM6_I:
        q = u / 4.0
        return (log_prop5(TransformId.PROP5_B0, q, tol) + log_prop5(TransformId.PROP5_B, q, tol)
                + 2.0 * log_prop5(TransformId.PROP5_K, q, tol))
    raise ValueError(f"{tid.value} is not a Theorem-6 transform")


def thm6_transform(tid: TransformId, u: float, tol: float = 1e-12) -> float:
    """Characteristic functions of I, J, Y.

    ``Thm6_I`` is the product of the four Laplace factors at ``u/4``; its
    ``S_odd(u/2)`` factor therefore carries exponent -1 (see ``thm6_printed``).
    """
    return math.exp(log_thm6(tid, u, tol))


def thm6_printed(u: float, tol: float = 1e-12) -> float:
    """The alternative form of E exp(iuI) with S_odd(u/2) to the power +1."""
    u = _check_arg(u)
    q = u / 4.0
    log_val = (-0.5 * (log_product(ProductId.C_ODD, u / 2.0, tol) + _log_4t_over_u(q, tol)
                       + log_product(ProductId.S, q, tol))
               + log_product(ProductId.S_ODD, u / 2.0, tol))
    return math.exp(log_val)


def transform(tid: TransformId, u: float, tol: float = 1e-12) -> float:
    tid = TransformId(tid)
    if tid.value.startswith("Prop5"):
        return prop5_laplace(tid, u, tol)
    return thm6_transform(tid, u, tol)


def curve_csv(tid: TransformId, us, tol: float = 1e-12) -> str:
    from . import __version__

    tid = TransformId(tid)
    lines = [f"# transform={tid.value},version={__version__}", "u,value"]
    lines += [f"{float(u)!r},{transform(tid, u, tol)!r}" for u in us]
    return "\n".join(lines) + "\n"

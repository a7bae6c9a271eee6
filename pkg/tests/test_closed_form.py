import math

import mpmath
import pytest

from sheetlaw import closed_form as cf
from sheetlaw import spectral as sp
from sheetlaw.closed_form import ProductId as Pid, TransformId as Tid
from sheetlaw.kernels import ProcessKind as P

ARGS = (0.5, 1.0, 2.0, 4.0)
mpmath.mp.dps = 30

_MP = {
    Pid.C: (1, 1, mpmath.cosh),
    Pid.C_ODD: (2, 1, mpmath.cosh),
    Pid.C_EVEN: (2, 2, mpmath.cosh),
    Pid.S: (1, 1, lambda x: mpmath.sinh(x) / x),
    Pid.S_EVEN: (2, 2, lambda x: mpmath.sinh(x) / x),
    Pid.S_ODD: (2, 1, lambda x: mpmath.sinh(x) / x),
}


def _mp_log_product(pid, a):
    step, start, f = _MP[pid]
    a = mpmath.mpf(a)
    return mpmath.nsum(lambda k: mpmath.log(f(a / ((step * k + start) * mpmath.pi))), [0, mpmath.inf])


def _mp_t(a):
    a = mpmath.mpf(a)
    return mpmath.nsum(lambda k: mpmath.tanh(2 * a / ((2 * k + 1) * mpmath.pi)) / ((2 * k + 1) * mpmath.pi),
                       [0, mpmath.inf])


@pytest.mark.parametrize("pid", list(_MP))
@pytest.mark.parametrize("a", [1e-4, 0.05, 0.3, 1.0, 4.0, 25.0])
def test_products_against_mpmath(pid, a):
    # relative accuracy must hold for small arguments too, where log-factors cancel
    assert cf.log_product(pid, a) == pytest.approx(float(_mp_log_product(pid, a)), rel=1e-12)


@pytest.mark.parametrize("a", [0.3, 1.0, 4.0, 25.0])
def test_t_series_against_mpmath(a):
    assert cf.t_series(a) == pytest.approx(float(_mp_t(a)), rel=1e-10)


def test_values_at_zero():
    assert cf.eval_product(Pid.C, 0.0) == 1.0
    assert cf.eval_product(Pid.S, 0.0) == 1.0
    assert cf.t_series(0.0) == 0.0
    for tid in Tid:
        assert cf.transform(tid, 0.0) == 1.0


@pytest.mark.parametrize("a", ARGS)
def test_cross_identities(a):
    C = lambda pid, x: cf.eval_product(pid, x)  # noqa: E731
    assert C(Pid.C_EVEN, a) == pytest.approx(C(Pid.C, a / 2), rel=1e-8)
    assert C(Pid.S_EVEN, a) == pytest.approx(C(Pid.S, a / 2), rel=1e-8)
    assert C(Pid.S_ODD, a) == pytest.approx(C(Pid.C, a / 2), rel=1e-8)
    assert C(Pid.S, a) == pytest.approx(C(Pid.S_EVEN, a) * C(Pid.S_ODD, a), rel=1e-8)


def test_truncation_self_consistency():
    direct = cf.log_product(Pid.S, 1.0, terms=10**6)
    short = cf.log_product(Pid.S, 1.0, terms=10**4)
    adaptive = cf.log_product(Pid.S, 1.0)
    assert short == pytest.approx(direct, rel=1e-12)
    assert adaptive == pytest.approx(direct, rel=1e-12)


def test_large_argument_does_not_overflow():
    v = cf.log_product(Pid.C, 2000.0)
    assert math.isfinite(v) and v > 0
    assert cf.prop5_laplace(Tid.PROP5_B, 500.0) > 0.0


def _tensor(k1, k2):
    return sp.tensor_spectrum(sp.analytic_spectrum(k1, 2000), sp.analytic_spectrum(k2, 2000))


@pytest.mark.parametrize("u", ARGS)
def test_prop5_duality(u):
    bb, bw = _tensor(P.BRIDGE_1D, P.BRIDGE_1D), _tensor(P.BRIDGE_1D, P.WIENER_1D)
    for tid, s in ((Tid.PROP5_B0, bb), (Tid.PROP5_K, bw)):
        lhs = sp.laplace_from_spectrum(s, u)
        assert abs(lhs - cf.prop5_laplace(tid, u)) / lhs <= 1e-8
    assert cf.prop5_laplace(Tid.PROP5_B0, u) == pytest.approx(cf.eval_product(Pid.S, u) ** -0.5, rel=1e-14)
    assert cf.prop5_laplace(Tid.PROP5_K, u) == pytest.approx(cf.eval_product(Pid.S_ODD, 2 * u) ** -0.5, rel=1e-14)


def test_prop5_b_small_u_limit():
    # 4T(u)/u -> 1 - u^2/9 + O(u^4)
    for u in (1e-7, 1e-5, 1e-3):
        expected = math.exp(-0.5 * (cf.log_product(Pid.C_ODD, 2 * u) + math.log1p(-u * u / 9)))
        assert cf.prop5_laplace(Tid.PROP5_B, u) == pytest.approx(expected, rel=1e-10)
    left = cf.prop5_laplace(Tid.PROP5_B, 0.999999e-6)
    right = cf.prop5_laplace(Tid.PROP5_B, 1.000001e-6)
    assert abs(left - right) < 1e-15


def test_prop5_b_second_moment():
    # -d/d(u^2/2) at 0 gives E Q = trace of the bridge-sheet kernel = 1/4 - 1/9
    h = 1e-3
    log_l = math.log(cf.prop5_laplace(Tid.PROP5_B, h))
    assert -log_l / (h * h / 2) == pytest.approx(1 / 4 - 1 / 9, rel=1e-5)


def test_thm6_examples():
    b0 = cf.prop5_laplace(Tid.PROP5_B0, 1.0)
    assert cf.thm6_transform(Tid.THM6_J, 2.0) == pytest.approx(b0**2, rel=1e-13)
    assert cf.thm6_transform(Tid.THM6_Y, 4.0) == pytest.approx(b0**4, rel=1e-13)
    assert cf.thm6_transform(Tid.THM6_J, 2.0) == pytest.approx(cf.eval_product(Pid.S, 1.0) ** -1, rel=1e-13)


def test_thm6_i_derived_vs_printed_differ():
    u = 2.0
    derived, printed = cf.thm6_transform(Tid.THM6_I, u), cf.thm6_printed(u)
    assert printed / derived == pytest.approx(cf.eval_product(Pid.S_ODD, u / 2) ** 2, rel=1e-12)
    assert cf.thm6_printed(0.0) == 1.0


@pytest.mark.parametrize("tid", list(Tid))
def test_transforms_in_unit_interval_and_even(tid):
    prev = 1.0
    for u in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
        v = cf.transform(tid, u)
        assert 0.0 < v <= 1.0 and v < prev
        assert cf.transform(tid, -u) == pytest.approx(v, rel=1e-14)
        prev = v


def test_products_at_least_one():
    for pid in _MP:
        for a in (-3.0, 0.1, 7.0):
            assert cf.eval_product(pid, a) >= 1.0


def test_errors():
    with pytest.raises(ValueError):
        cf.log_product(Pid.S, float("nan"))
    with pytest.raises(ValueError):
        cf.log_product(Pid.S, 1.0, tol=0.5)
    with pytest.raises(ValueError):
        cf.log_product(Pid.T_SERIES, 1.0)
    with pytest.raises(ValueError):
        cf.log_prop5(Tid.THM6_J, 1.0)
    with pytest.raises(ValueError):
        cf.log_thm6(Tid.PROP5_B, 1.0)


def test_curve_csv():
    text = cf.curve_csv(Tid.PROP5_B0, [0.0, 1.0])
    lines = text.splitlines()
    assert lines[0].startswith("# transform=Prop5_B0,version=")
    assert lines[1] == "u,value"
    assert lines[2] == "0.0,1.0"
    assert float(lines[3].split(",")[1]) == cf.prop5_laplace(Tid.PROP5_B0, 1.0)

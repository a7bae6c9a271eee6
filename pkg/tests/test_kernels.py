import itertools

import numpy as np
import pytest

from sheetlaw.kernels import (CenteringKind as C, CovKernel, Factor, Point2, ProcessKind as P,
                              centered_kernel, cross_cov_sym_antisym, eval_kernel, make_kernel, midpoints,
                              projected_cov_1d)

KINDS_2D = [P.SHEET, P.BRIDGE_B, P.TIED_DOWN_B0, P.KIEFER1, P.KIEFER2]
ALL_2D = [CovKernel(k, c) for k in KINDS_2D for c in C]
ALL_1D = [CovKernel(k, c) for k in (P.WIENER_1D, P.BRIDGE_1D, P.CENTERED_WIENER_1D)
          for c in (C.NONE, C.FULL_MEAN)]


def test_sheet_value():
    assert eval_kernel(make_kernel(P.SHEET), Point2(0.5, 0.5), Point2(0.5, 0.5)) == 0.25


def test_tied_down_value():
    assert eval_kernel(make_kernel(P.TIED_DOWN_B0), (0.5, 0.5), (0.5, 0.5)) == pytest.approx(0.0625, abs=1e-15)


def test_kiefer1_value():
    assert eval_kernel(make_kernel(P.KIEFER1), (0.25, 0.5), (0.75, 0.5)) == pytest.approx(0.03125, abs=1e-15)


@pytest.mark.parametrize("t1", [0.0, 1.0])
def test_tied_down_vanishes_on_edges(t1):
    assert eval_kernel(make_kernel(P.TIED_DOWN_B0), (t1, 0.3), (0.6, 0.7)) == 0.0


def _bridge_full_mean_series(t, terms=200_000):
    # b - mean(b) = sum_j c_j xi_j with the sine basis of the bridge
    j = np.arange(1, terms + 1)
    c = np.sqrt(2.0) * (np.sin(j * np.pi * t) / (j * np.pi) - (1 - (-1.0) ** j) / (j * np.pi) ** 2)
    return c


def test_bridge_full_mean_against_series_and_mc():
    k = CovKernel(P.BRIDGE_1D, C.FULL_MEAN)
    value = eval_kernel(k, (0.25,), (0.25,))
    c = _bridge_full_mean_series(0.25)
    assert value == pytest.approx(float(np.sum(c * c)), abs=1e-6)
    # Monte Carlo of the truncated expansion, 1e6 samples
    head = c[:48]
    rest = float(np.sum(c[48:] ** 2))
    g = np.random.default_rng(12345)
    acc = []
    for _ in range(10):
        acc.append(g.standard_normal((100_000, head.size)) @ head)
    x = np.concatenate(acc)
    var = float(np.var(x, ddof=1)) + rest
    se = float(np.std(x * x, ddof=1) / np.sqrt(x.size))
    assert abs(var - value) <= 3 * se


def _quad_row_mean(factor, t, n=4096):
    u = midpoints(n)
    return float(np.mean(factor(t, u)))


def test_full_mean_against_quadrature():
    base = make_kernel(P.TIED_DOWN_B0)
    k = centered_kernel(base, C.FULL_MEAN)
    p = np.array([0.5, 0.5])
    n = 4096
    u = midpoints(n)
    # row integral of the bridge factor by quadrature (exact for piecewise-linear integrands)
    mb = float(np.mean(Factor("bridge")(0.5, u)))
    tot = float(np.mean(Factor("bridge").gram(u[::16])))
    quad_value = base(p, p) - 2 * mb * mb + tot * tot
    assert k(p, p) == pytest.approx(quad_value, abs=2e-6)
    # the row integral itself is exact on the aligned grid
    assert mb == pytest.approx(0.125, abs=1e-12)
    assert k(p, p) == pytest.approx(1 / 16 - 2 / 64 + 1 / 144, abs=1e-15)


@pytest.mark.parametrize("base", ["min", "bridge", "prod"])
@pytest.mark.parametrize("t", [0.25, 0.5, 0.75])
def test_factor_row_integral_closed_form(base, t):
    f = Factor(base)
    assert f.row_integral(t) == pytest.approx(_quad_row_mean(f, t), abs=1e-10)


def test_kiefer1_row_mean_is_separable_with_centered_wiener():
    k = centered_kernel(make_kernel(P.KIEFER1), C.ROW_MEAN)
    assert k.separable
    f1, f2 = k.factors
    assert (f1.base, f1.centered) == ("bridge", False)
    assert (f2.base, f2.centered) == ("min", True)


def test_kiefer1_col_mean_centres_first_factor():
    f1, f2 = centered_kernel(make_kernel(P.KIEFER1), C.COL_MEAN).factors
    assert (f1.base, f1.centered, f2.base, f2.centered) == ("bridge", True, "min", False)


def test_none_centering_is_identity():
    base = make_kernel(P.BRIDGE_B)
    assert centered_kernel(base, C.NONE) is base


def test_double_centering_rejected():
    k = centered_kernel(make_kernel(P.SHEET), C.ROW_MEAN)
    with pytest.raises(ValueError):
        centered_kernel(k, C.COL_MEAN)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_kernel(make_kernel(P.SHEET), (0.5,), (0.5,))
    with pytest.raises(ValueError):
        CovKernel(P.BRIDGE_1D, C.ROW_MEAN)


def test_point_validation():
    with pytest.raises(ValueError):
        Point2(1.2, 0.3)
    with pytest.raises(ValueError):
        eval_kernel(make_kernel(P.SHEET), (0.5, -0.1), (0.5, 0.5))


@pytest.mark.parametrize("s,t", [(0.25, 0.25), (0.0, 0.37), (0.1, 0.4), (0.5, 0.5)])
def test_cross_cov_zero(s, t):
    assert abs(cross_cov_sym_antisym(s, t)) <= 1e-14


@pytest.mark.parametrize("kernel", ALL_2D + ALL_1D, ids=lambda k: k.label())
def test_symmetry_exact(kernel):
    g = np.random.default_rng(0)
    if kernel.dim == 2:
        p, q = g.random((10_000, 2)), g.random((10_000, 2))
    else:
        p, q = g.random(10_000), g.random(10_000)
    assert np.array_equal(kernel(p, q), kernel(q, p))


def _min_max_eig(kernel, n):
    if kernel.dim == 2 and kernel.separable:
        f1, f2 = kernel.factors
        x = midpoints(n)
        a = np.linalg.eigvalsh(f1.gram(x) / n)
        b = np.linalg.eigvalsh(f2.gram(x) / n)
        w = np.outer(a, b).ravel()
    else:
        w = np.linalg.eigvalsh(kernel.gram(n) / n ** kernel.dim)
    return w.min(), w.max()


@pytest.mark.parametrize("kernel", ALL_2D + ALL_1D, ids=lambda k: k.label())
def test_psd_on_grid(kernel):
    lo, hi = _min_max_eig(kernel, 64)
    assert lo >= -1e-10 * hi


def test_edge_conditions():
    g = np.random.default_rng(1)
    q = g.random((200, 2))
    b0, k1, k2, bb = (make_kernel(k) for k in (P.TIED_DOWN_B0, P.KIEFER1, P.KIEFER2, P.BRIDGE_B))
    for e in (0.0, 1.0):
        r = g.random(200)
        for p in (np.stack([np.full(200, e), r], 1), np.stack([r, np.full(200, e)], 1)):
            assert np.all(b0(p, q) == 0)
        assert np.all(k1(np.stack([np.full(200, e), r], 1), q) == 0)
        assert np.all(k2(np.stack([r, np.full(200, e)], 1), q) == 0)
    r = g.random(200)
    assert np.all(bb(np.stack([np.zeros(200), r], 1), q) == 0)
    assert np.all(bb(np.stack([r, np.zeros(200)], 1), q) == 0)
    assert np.all(np.abs(bb(np.ones((200, 2)), q)) <= 1e-16)


@pytest.mark.parametrize("kernel", [k for k in ALL_2D if k.separable], ids=lambda k: k.label())
def test_separability(kernel):
    g = np.random.default_rng(2)
    p, q = g.random((10_000, 2)), g.random((10_000, 2))
    f1, f2 = kernel.factors
    assert np.max(np.abs(kernel(p, q) - f1(p[:, 0], q[:, 0]) * f2(p[:, 1], q[:, 1]))) == 0.0


def test_separable_flags():
    assert not make_kernel(P.BRIDGE_B).separable
    assert not CovKernel(P.TIED_DOWN_B0, C.FULL_MEAN).separable
    assert CovKernel(P.TIED_DOWN_B0, C.DOUBLE_MEAN).separable
    with pytest.raises(ValueError):
        make_kernel(P.BRIDGE_B).factors


@pytest.mark.parametrize("t", np.linspace(0, 0.5, 11))
def test_lemma4_marginals(t):
    var_a = projected_cov_1d(t, t, "A", "A")
    var_s = projected_cov_1d(t, t, "S", "S")
    assert var_a == pytest.approx(0.25 * (2 * t) * (1 - 2 * t), abs=1e-14)
    assert var_s == pytest.approx(0.25 * (2 * t), abs=1e-14)


@pytest.mark.parametrize("kernel", ALL_2D, ids=lambda k: k.label())
def test_trace_matches_diagonal_quadrature(kernel):
    n = 400
    x = midpoints(n)
    a, b = np.meshgrid(x, x, indexing="ij")
    p = np.stack([a.ravel(), b.ravel()], 1)
    assert kernel.trace == pytest.approx(float(np.mean(kernel(p, p))), rel=1e-4)


def test_centered_wiener_full_is_idempotent():
    k1 = CovKernel(P.CENTERED_WIENER_1D)
    k2 = CovKernel(P.CENTERED_WIENER_1D, C.FULL_MEAN)
    s, t = np.random.default_rng(3).random((2, 50))
    assert np.array_equal(k1(s, t), k2(s, t))
    # and it equals the fully centred Wiener kernel
    k3 = CovKernel(P.WIENER_1D, C.FULL_MEAN)
    assert np.allclose(k1(s, t), k3(s, t), atol=1e-15)


def test_gram_row_major_in_first_coordinate():
    k = make_kernel(P.KIEFER1)
    n = 4
    G = k.gram(n)
    x = midpoints(n)
    for (i1, i2), (j1, j2) in itertools.product(itertools.product(range(n), repeat=2), repeat=2):
        p, q = np.array([x[i1], x[i2]]), np.array([x[j1], x[j2]])
        assert G[i1 * n + i2, j1 * n + j2] == pytest.approx(float(k(p, q)), abs=1e-15)

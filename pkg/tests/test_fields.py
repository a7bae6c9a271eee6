import numpy as np
import pytest

from sheetlaw import _accel, fields
from sheetlaw.fields import GridField, ProjectionKind as PK
from sheetlaw.kernels import CenteringKind as C, CovKernel, ProcessKind as P


def _point(n):
    # lattice index whose corner is (1/2, 1/2)
    return n // 2 - 1


def _cov_samples(kind, n, count, stream):
    i = _point(n)

    def tf(W):
        F = W if kind is P.SHEET else _accel.derive(W, fields.PROCESS_CODE[kind])
        return F[:, i, i]

    return fields.mc_samples(tf, n, 2024, stream, count)


def _within(x, target, k=3.0):
    se = np.std(x, ddof=1) / np.sqrt(x.size)
    return abs(np.mean(x) - target) <= k * se


@pytest.mark.parametrize("kind,target", [(P.SHEET, 0.25), (P.BRIDGE_B, 0.1875), (P.KIEFER1, 0.125),
                                         (P.TIED_DOWN_B0, 0.0625)])
def test_pointwise_variance(kind, target):
    x = _cov_samples(kind, 16, 100_000, f"var/{kind.value}")
    assert _within(x * x, target)


def test_sheet_corner_mean_zero():
    x = fields.mc_samples(lambda W: W[:, -1, -1], 16, 7, "corner", 100_000)
    assert _within(x, 0.0)


def test_exact_corner_covariance():
    # the construction is exact at the corners: Cov(W_ij, W_kl) = (i^k)(j^l)/n^2
    n = 6
    G = np.stack([_accel.sheet_from_normals(np.eye(n * n)[k].reshape(1, n, n))[0].ravel()
                  for k in range(n * n)])
    cov = G.T @ G
    idx = np.arange(1, n + 1)
    I, J = np.meshgrid(idx, idx, indexing="ij")
    I, J = I.ravel(), J.ravel()
    expected = np.minimum.outer(I, I) * np.minimum.outer(J, J) / n**2
    assert np.allclose(cov, expected, atol=1e-14)


def test_determinism():
    a = fields.sample_sheet(16, 99)
    b = fields.sample_sheet(16, 99)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, fields.sample_sheet(16, 100).values)


def test_sample_matches_batch_pipeline():
    f = fields.sample_sheet(8, 5, index=3)
    batch = fields.mc_samples(lambda W: W.reshape(W.shape[0], -1), 8, 5, "sheet", 4)
    assert np.array_equal(batch[3].reshape(8, 8), f.values)


def test_sample_sheet_rejects_small_n():
    with pytest.raises(ValueError):
        fields.sample_sheet(1, 0)


@pytest.mark.parametrize("kind", [P.BRIDGE_B, P.TIED_DOWN_B0, P.KIEFER1, P.KIEFER2])
def test_derived_boundaries(kind):
    W = fields.sample_sheet(16, 3)
    F = fields.derive(W, kind).values
    if kind is P.TIED_DOWN_B0:
        assert np.max(np.abs(F[-1, :])) < 1e-14 and np.max(np.abs(F[:, -1])) < 1e-14
    if kind is P.KIEFER1:
        assert np.max(np.abs(F[-1, :])) < 1e-14
    if kind is P.KIEFER2:
        assert np.max(np.abs(F[:, -1])) < 1e-14
    if kind is P.BRIDGE_B:
        assert abs(F[-1, -1]) < 1e-14


def test_derive_errors():
    W = fields.sample_sheet(4, 0)
    with pytest.raises(ValueError):
        fields.derive(W, P.SHEET)
    with pytest.raises(ValueError):
        fields.derive(fields.derive(W, P.KIEFER1), P.KIEFER2)


def _field(values, kind=P.SHEET):
    v = np.asarray(values, dtype=float)
    return GridField(v.shape[0], v, 0, kind)


def test_projection_sum_and_constants():
    f = fields.sample_sheet(16, 8)
    parts = [fields.project(f, p).values for p in (PK.T1, PK.T2, PK.T3, PK.T4)]
    assert np.max(np.abs(sum(parts) - f.values)) <= 1e-14
    c = _field(np.full((8, 8), 2.5))
    assert np.array_equal(fields.project(c, PK.T1).values, c.values)
    for p in (PK.T2, PK.T3, PK.T4):
        assert np.all(fields.project(c, p).values == 0)


def test_projection_orthogonality_and_symmetry():
    f, g = fields.sample_sheet(16, 1).values, fields.sample_sheet(16, 2).values
    ff, gg = _field(f), _field(g)
    T = [fields.project(ff, p).values for p in (PK.T1, PK.T2, PK.T3, PK.T4)]
    U = [fields.project(gg, p).values for p in (PK.T1, PK.T2, PK.T3, PK.T4)]
    for i in range(4):
        for j in range(4):
            if i != j:
                assert abs(np.sum(T[i] * U[j])) / 256 <= 1e-12
    signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    for Ti, (s1, s2) in zip(T, signs):
        assert np.allclose(Ti[::-1, :], s1 * Ti, atol=1e-15)
        assert np.allclose(Ti[:, ::-1], s2 * Ti, atol=1e-15)


def test_projection_composition():
    f = fields.sample_sheet(8, 4)
    s1 = fields.project(f, PK.S1)
    a2 = fields.project(s1, PK.A2)
    assert np.allclose(a2.values, fields.project(f, PK.T2).values, atol=1e-15)


def test_projection_requires_even_n():
    with pytest.raises(ValueError):
        fields.project(fields.sample_sheet(5, 0), PK.T1)


def test_quad_functional_trivial():
    c = _field(np.full((8, 8), 3.0))
    assert fields.quad_functional(c, C.FULL_MEAN) == pytest.approx(0.0, abs=1e-28)
    assert fields.quad_functional(_field(np.ones((8, 8)))) == 1.0


def test_energy_decomposition():
    F = fields.derive(fields.sample_sheet(32, 11), P.TIED_DOWN_B0)
    total = fields.quad_functional(F)
    parts = sum(fields.quarter_functional(fields.project(F, p)) for p in (PK.T1, PK.T2, PK.T3, PK.T4))
    assert total == pytest.approx(4 * parts, rel=1e-12)


def test_b0_mean_functional():
    n = 16
    tf = fields.functional(P.TIED_DOWN_B0)
    x = fields.mc_samples(tf, n, 3, "b0mean", 100_000)
    exact_grid = fields.discrete_mean(tf, n)
    assert _within(x, exact_grid)
    # grid bias is O(1/n)
    assert abs(exact_grid - 1 / 36) <= (4 / n) / 36


def test_projection_independence():
    n, N = 16, 10_000

    def tf(W):
        F = _accel.derive(W, fields.PROCESS_CODE[P.TIED_DOWN_B0])
        return np.stack([_accel.quarter_quad(_accel.reflect(F, *s)) for s in ((1, 1), (1, -1), (-1, 1), (-1, -1))],
                        axis=1)

    cols = fields.mc_samples(tf, n, 5, "indep", N)
    r = np.corrcoef(cols.T)
    off = r[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off)) <= 4 / np.sqrt(N)


def test_b_w_scaling():
    # T1 B0 on [0,1/2]^2 has the covariance of W/2
    n, N = 32, 20_000
    i, j = n // 4 - 1, n // 8 - 1

    def tf(W):
        F = _accel.reflect(_accel.derive(W, fields.PROCESS_CODE[P.TIED_DOWN_B0]), 1, 1)
        return np.stack([F[:, i, i], F[:, j, i]], axis=1)

    x = fields.mc_samples(tf, n, 9, "bw", N)
    mid = (np.arange(n) + 0.5) / n
    ti, tj = mid[i], mid[j]
    target = 0.25 * min(ti, tj) * ti
    c = x[:, 0] * x[:, 1]
    se = np.std(c, ddof=1) / np.sqrt(N)
    assert abs(np.mean(c) - target) <= 3 * se + (4 / n) * target


def test_chunking_and_workers_do_not_change_samples(threads):
    tf = fields.functional(P.BRIDGE_B, C.FULL_MEAN)
    a = fields.mc_samples(tf, 8, 1, "chunk", 50, chunk=1024)
    b = fields.mc_samples(tf, 8, 1, "chunk", 50, chunk=7)
    threads(3)
    c = fields.mc_samples(tf, 8, 1, "chunk", 50, chunk=7)
    assert np.array_equal(a, b) and np.array_equal(a, c)


def test_discrete_mean_matches_kernel_trace_scale():
    n = 24
    for kind, cent in ((P.SHEET, C.FULL_MEAN), (P.KIEFER2, C.NONE)):
        dm = fields.discrete_mean(fields.functional(kind, cent), n)
        assert dm == pytest.approx(CovKernel(kind, cent).trace, rel=8 / n)


def test_discrete_mean_multi_column():
    tf = lambda W: np.stack([_accel.quad(W, 0), 2 * _accel.quad(W, 0)], axis=1)  # noqa: E731
    m = fields.discrete_mean(tf, 6)
    assert m.shape == (2,) and m[1] == pytest.approx(2 * m[0])


def test_mc_joint_streams_are_independent_copies():
    out = fields.mc_joint(lambda A, B: np.stack([A[:, -1, -1], B[:, -1, -1]], 1), 8, 3, ("a", "b"), 5)
    a = fields.mc_samples(lambda W: W[:, -1, -1], 8, 3, "a", 5)
    assert np.array_equal(out[:, 0], a)
    assert not np.array_equal(out[:, 0], out[:, 1])


def test_sample_path_kinds():
    x = fields.sample_path(64, 3, P.WIENER_1D)
    b = fields.sample_path(64, 3, P.BRIDGE_1D)
    z = fields.sample_path(64, 3, P.CENTERED_WIENER_1D)
    assert abs(b[-1]) < 1e-14
    assert abs(z.mean()) < 1e-14
    assert np.allclose(x - z, x.mean())
    with pytest.raises(ValueError):
        fields.sample_path(8, 0, P.SHEET)


def test_gridfield_validation():
    with pytest.raises(ValueError):
        GridField(1, np.zeros((1, 1)), 0, P.SHEET)
    with pytest.raises(ValueError):
        GridField(3, np.zeros((3, 2)), 0, P.SHEET)
    with pytest.raises(ValueError):
        GridField(2, np.array([[0.0, np.nan], [0.0, 0.0]]), 0, P.SHEET)
    f = fields.sample_sheet(4, 0)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_csv_round_trip(tmp_path):
    f = fields.derive(fields.sample_sheet(8, 42, index=2), P.KIEFER2)
    path = tmp_path / "f.csv"
    text = fields.field_to_csv(f, path)
    assert text.startswith("# n=8,seed=42,kind=kiefer2,index=2,version=")
    g = fields.field_from_csv(path)
    assert np.array_equal(f.values, g.values)
    assert (g.n, g.seed, g.kind, g.index) == (8, 42, P.KIEFER2, 2)
    for c in C:
        assert fields.quad_functional(f, c) == fields.quad_functional(g, c)

"""Brownian sheet simulation, derived processes, symmetry projections and
quadratic path functionals on a uniform grid.

Grid convention: cell increments are i.i.d. N(0, 1/n^2); the sheet is read on
the corner lattice ``(i/n, j/n)``, ``i, j = 1..n``, which gives an exact
finite-dimensional law.  Entry ``values[i-1, j-1]`` is labelled with the
midpoint ``((i-1/2)/n, (j-1/2)/n)``; the half-cell offset is part of the
grid bias.  Path integrals are Riemann sums with weight ``1/n^2``.
"""
from __future__ import annotations

import enum
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from . import _accel, rng
from .kernels import CenteringKind, ProcessKind

PROCESS_CODE = {
    ProcessKind.SHEET: 0,
    ProcessKind.BRIDGE_B: 1,
    ProcessKind.TIED_DOWN_B0: 2,
    ProcessKind.KIEFER1: 3,
    ProcessKind.KIEFER2: 4,
}
CENTERING_CODE = {
    CenteringKind.NONE: 0,
    CenteringKind.FULL_MEAN: 1,
    CenteringKind.ROW_MEAN: 2,
    CenteringKind.COL_MEAN: 3,
    CenteringKind.DOUBLE_MEAN: 4,
}

CHUNK = 1024


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("SHEETLAW_THREADS", "1")))
    except ValueError:
        return 1


class ProjectionKind(str, enum.Enum):
    S1 = "S1"
    S2 = "S2"
    A1 = "A1"
    A2 = "A2"
    T1 = "T1"  # S1 S2
    T2 = "T2"  # S1 A2
    T3 = "T3"  # A1 S2
    T4 = "T4"  # A1 A2

    @property
    def signs(self) -> tuple[int, int]:
        return _SIGNS[self]


_SIGNS = {
    ProjectionKind.S1: (1, 0), ProjectionKind.S2: (0, 1),
    ProjectionKind.A1: (-1, 0), ProjectionKind.A2: (0, -1),
    ProjectionKind.T1: (1, 1), ProjectionKind.T2: (1, -1),
    ProjectionKind.T3: (-1, 1), ProjectionKind.T4: (-1, -1),
}


@dataclass(frozen=True, eq=False)
class GridField:
    n: int
    values: np.ndarray
    seed: int
    kind: ProcessKind
    index: int = 0
    history: tuple[str, ...] = dc_field(default_factory=tuple)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid resolution must be at least 2")
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.n, self.n):
            raise ValueError(f"values must be {self.n}x{self.n}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "kind", ProcessKind(self.kind))

    def _replace(self, values, kind=None, step=None) -> "GridField":
        hist = self.history + ((step,) if step else ())
        return GridField(self.n, values, self.seed, kind or self.kind, self.index, hist)


def lattice(n: int) -> np.ndarray:
    """Corner coordinates i/n, i = 1..n, at which values are realised."""
    return np.arange(1, n + 1) / n


# ---------------------------------------------------------------------------
# single-field API
# ---------------------------------------------------------------------------

def sample_sheet(n: int, seed: int, index: int = 0, stream: str = "sheet") -> GridField:
    if n < 2:
        raise ValueError("grid resolution must be at least 2")
    z = rng.normals(seed, stream, index, 1, n * n).reshape(1, n, n)
    W = _accel.sheet_from_normals(z)[0]
    return GridField(n, W, seed, ProcessKind.SHEET, index)


def derive(f: GridField, target: ProcessKind) -> GridField:
    target = ProcessKind(target)
    if f.kind is not ProcessKind.SHEET:
        raise ValueError("derive() needs a Brownian sheet field")
    if target is ProcessKind.SHEET or target not in PROCESS_CODE:
        raise ValueError(f"cannot derive {target.value} from a sheet")
    out = _accel.derive(f.values[None], PROCESS_CODE[target])[0]
    return f._replace(out, kind=target, step=f"derive:{target.value}")


def project(f: GridField, p: ProjectionKind) -> GridField:
    p = ProjectionKind(p)
    if f.n % 2:
        raise ValueError("projections need an even grid resolution")
    s1, s2 = p.signs
    out = _accel.reflect(f.values[None], s1, s2)[0]
    return f._replace(out, step=f"project:{p.value}")


def quad_functional(f: GridField, c: CenteringKind = CenteringKind.NONE) -> float:
    return float(_accel.quad(f.values[None], CENTERING_CODE[CenteringKind(c)])[0])


def quarter_functional(f: GridField) -> float:
    """Riemann sum of the squared field over [0, 1/2]^2 (weight 1/n^2)."""
    if f.n % 2:
        raise ValueError("quarter functional needs an even grid resolution")
    return float(_accel.quarter_quad(f.values[None])[0])


def sample_path(n: int, seed: int, kind: ProcessKind = ProcessKind.WIENER_1D,
                index: int = 0, stream: str = "path") -> np.ndarray:
    """One 1-D path on the lattice i/n, i = 1..n."""
    z = rng.normals(seed, stream, index, 1, n)
    return _path_transform(ProcessKind(kind))(_accel.path_from_normals(z))[0]


def _path_transform(kind: ProcessKind):
    def tf(x):
        if kind is ProcessKind.WIENER_1D:
            return x
        n = x.shape[1]
        t = lattice(n)
        b = x - t[None, :] * x[:, -1:]
        if kind is ProcessKind.BRIDGE_1D:
            return b
        if kind is ProcessKind.CENTERED_WIENER_1D:
            return x - x.mean(axis=1, keepdims=True)
        raise ValueError(f"{kind.value} is not a 1-D process")
    return tf


# ---------------------------------------------------------------------------
# batch Monte Carlo machinery
# ---------------------------------------------------------------------------

Transform = Callable[[np.ndarray], np.ndarray]


def functional(kind: ProcessKind, centering: CenteringKind = CenteringKind.NONE) -> Transform:
    """Sheet batch -> quadratic functional of the derived, centered field."""
    pc = PROCESS_CODE[ProcessKind(kind)]
    cc = CENTERING_CODE[CenteringKind(centering)]

    def tf(W):
        F = W if pc == 0 else _accel.derive(W, pc)
        return _accel.quad(F, cc)
    return tf


def path_functional(kind: ProcessKind, centered: bool = False) -> Transform:
    ptf = _path_transform(ProcessKind(kind))

    def tf(x):
        return _accel.quad_1d(ptf(x), centered)
    return tf


def _run_chunks(fn, count: int, chunk: int):
    starts = list(range(0, count, chunk))
    jobs = [(s, min(chunk, count - s)) for s in starts]
    workers = worker_count()
    if workers == 1 or len(jobs) == 1:
        parts = [fn(s, c) for s, c in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda job: fn(*job), jobs))
    return np.concatenate(parts, axis=0)


def mc_samples(transform: Transform, n: int, seed: int, stream: str, count: int,
               dim: int = 2, chunk: int = CHUNK) -> np.ndarray:
    """``count`` i.i.d. values of ``transform`` applied to sheets (dim=2) or paths (dim=1).

    Sample ``k`` always uses the random stream ``(seed, stream, k)``.
    """
    size = n * n if dim == 2 else n

    def run(start, c):
        z = rng.normals(seed, stream, start, c, size)
        if dim == 2:
            base = _accel.sheet_from_normals(z.reshape(c, n, n))
        else:
            base = _accel.path_from_normals(z)
        return np.asarray(transform(base))

    return _run_chunks(run, count, chunk)


def mc_joint(transform: Callable, n: int, seed: int, streams, count: int, chunk: int = CHUNK) -> np.ndarray:
    """Like ``mc_samples`` but ``transform`` receives one sheet batch per stream."""
    streams = tuple(streams)

    def run(start, c):
        sheets = [_accel.sheet_from_normals(rng.normals(seed, s, start, c, n * n).reshape(c, n, n))
                  for s in streams]
        return np.asarray(transform(*sheets))

    return _run_chunks(run, count, chunk)


def discrete_mean(transform: Transform, n: int, dim: int = 2, chunk: int = 512):
    """Exact expectation of a quadratic-form functional on the discrete grid.

    Feeding the unit-increment basis through the (linear) pipeline and summing
    the quadratic functional gives ``tr(G^T G)``, i.e. the mean for
    i.i.d. standard normal increments.  Multi-column transforms give one mean
    per column.
    """
    size = n * n if dim == 2 else n
    total = 0.0
    for start in range(0, size, chunk):
        c = min(chunk, size - start)
        z = np.zeros((c, size))
        z[np.arange(c), start + np.arange(c)] = 1.0
        base = _accel.sheet_from_normals(z.reshape(c, n, n)) if dim == 2 else _accel.path_from_normals(z)
        total = total + np.sum(np.asarray(transform(base)), axis=0)
    return float(total) if np.ndim(total) == 0 else total


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def field_to_csv(f: GridField, path=None) -> str:
    from . import __version__

    buf = io.StringIO()
    buf.write(f"# n={f.n},seed={f.seed},kind={f.kind.value},index={f.index},version={__version__}\n")
    np.savetxt(buf, f.values, delimiter=",", fmt="%.17g")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def field_from_csv(path) -> GridField:
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("missing field header")
        meta = dict(kv.split("=", 1) for kv in header[1:].strip().split(","))
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    return GridField(int(meta["n"]), values, int(meta["seed"]), ProcessKind(meta["kind"]), int(meta.get("index", 0)))

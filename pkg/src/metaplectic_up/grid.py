"""Uniform tensor-product grids, sampled complex functions, Riemann quadrature
and the MGF1 binary grid format."""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

DEFAULT_BUDGET = 2 ** 26
MAGIC = b"MGF1"


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    n: tuple
    min: tuple
    step: tuple
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        n = tuple(int(k) for k in np.atleast_1d(self.n))
        lo = tuple(float(v) for v in np.atleast_1d(self.min))
        h = tuple(float(v) for v in np.atleast_1d(self.step))
        if not (len(n) == len(lo) == len(h)) or not n:
            raise ValueError("n, min and step must have one entry per axis")
        if min(n) < 2:
            raise ValueError("every axis needs at least 2 samples")
        if min(h) <= 0:
            raise ValueError("steps must be positive")
        if int(np.prod(n, dtype=np.int64)) > self.budget:
            raise ValueError(f"grid of {np.prod(n)} samples exceeds budget {self.budget}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "step", h)

    @classmethod
    def symmetric(cls, d: int, n: int, L: float) -> "GridSpec":
        """n points per axis on [-L, L) with endpoint excluded (FFT friendly)."""
        h = 2.0 * L / n
        return cls((n,) * d, (-L,) * d, (h,) * d)

    @property
    def d(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple:
        return self.n

    @property
    def cell(self) -> float:
        return float(np.prod(self.step))

    def axes(self) -> list:
        return [lo + h * np.arange(k) for k, lo, h in zip(self.n, self.min, self.step)]

    def points(self) -> np.ndarray:
        """All grid points, shape ``n + (d,)``, row-major (``ij`` indexing)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)


@dataclass(frozen=True)
class GridFunction:
    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.spec.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.spec.shape}")
        if not np.all(np.isfinite(v)):
            raise SamplingError("grid values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __mul__(self, other):
        return GridFunction(self.spec, self.values * other)

    __rmul__ = __mul__


def sample(spec: GridSpec, evaluator) -> GridFunction:
    """Evaluate a vectorised ``evaluator(points) -> complex`` on the grid."""
    pts = spec.points()
    vals = np.asarray(evaluator(pts), dtype=complex)
    vals = np.broadcast_to(vals, spec.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.argwhere(bad)[0]
        raise SamplingError(f"non-finite value at point {pts[tuple(idx)].tolist()}")
    return GridFunction(spec, vals)


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.spec.cell))


def inner(f: GridFunction, g: GridFunction) -> complex:
    return complex(np.sum(f.values * np.conj(g.values)) * f.spec.cell)


def weighted_moment(f: GridFunction, coordinate_map, center: float = 0.0) -> float:
    """sum |coordinate_map(x) - center|^2 |f(x)|^2 * cell.

    ``coordinate_map`` is either a callable on the point array or a pair
    ``(a, b)`` standing for the affine functional ``x -> a.x + b``.
    """
    pts = f.spec.points()
    if callable(coordinate_map):
        ell = coordinate_map(pts)
    else:
        a, b = coordinate_map
        ell = pts @ np.asarray(a, float) + b
    return float(np.sum(np.abs(ell - center) ** 2 * np.abs(f.values) ** 2) * f.spec.cell)


def weighted_mean(f: GridFunction, coordinate_map) -> float:
    """The center minimising :func:`weighted_moment`."""
    pts = f.spec.points()
    if callable(coordinate_map):
        ell = coordinate_map(pts)
    else:
        a, b = coordinate_map
        ell = pts @ np.asarray(a, float) + b
    dens = np.abs(f.values) ** 2
    return float(np.sum(ell * dens) / np.sum(dens))


def write_mgf1(path, f: GridFunction) -> None:
    spec = f.spec
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", spec.d))
        for k, lo, h in zip(spec.n, spec.min, spec.step):
            fh.write(struct.pack("<Qdd", k, lo, h))
        pairs = np.empty(f.values.size * 2, dtype="<f8")
        flat = f.values.reshape(-1)
        pairs[0::2] = flat.real
        pairs[1::2] = flat.imag
        fh.write(pairs.tobytes())


def read_mgf1(path, budget: int = DEFAULT_BUDGET) -> GridFunction:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError("not an MGF1 file")
    (d,) = struct.unpack_from("<I", data, 4)
    off = 8
    n, lo, h = [], [], []
    for _ in range(d):
        k, a, s = struct.unpack_from("<Qdd", data, off)
        off += 24
        n.append(k)
        lo.append(a)
        h.append(s)
    spec = GridSpec(tuple(n), tuple(lo), tuple(h), budget)
    count = int(np.prod(n))
    pairs = np.frombuffer(data, dtype="<f8", count=2 * count, offset=off)
    if off + 16 * count != len(data):
        raise ValueError("MGF1 payload size does not match header")
    vals = (pairs[0::2] + 1j * pairs[1::2]).reshape(spec.shape)
    return GridFunction(spec, vals)

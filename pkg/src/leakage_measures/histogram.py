"""Equal-width multidimensional histograms on a shared grid.

Bins are addressed by a flat row-major index over ``K**d`` cells.  Grids up
to ``bin_budget`` cells store a dense count array; larger grids keep only
occupied cells as sorted ``(flat_index, count)`` pairs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from os import PathLike

import numpy as np

from .errors import ParameterError, ResourceError
from .scenarios import as_sample_matrix

DEFAULT_BIN_BUDGET = 20_000_000
_MAX_FLAT_INDEX = 2**62


@dataclass(frozen=True)
class BinRange:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ParameterError("lo and hi must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(lo < hi)):
            raise ParameterError("every dimension needs finite lo < hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size


def joint_range(a, b, margin: float = 1e-9) -> BinRange:
    """Per-dimension min/max over both sample sets, widened by ``margin * range``."""
    a = as_sample_matrix(a, "a")
    b = as_sample_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ParameterError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    lo = np.minimum(a.min(axis=0), b.min(axis=0))
    hi = np.maximum(a.max(axis=0), b.max(axis=0))
    width = hi - lo
    # constant columns still need a non-empty interval
    width = np.where(width > 0, width, np.maximum(np.abs(lo), 1.0))
    return BinRange(lo - margin * width, hi + margin * width)


@dataclass(frozen=True, eq=False)
class HistogramGrid:
    """Counts of ``total`` samples over ``bins_per_dim**d`` equal-width cells.

    ``counts`` is dense (length ``K**d``) when ``keys`` is None, otherwise it
    holds the counts of the occupied cells listed in ``keys``.
    """

    edges: tuple
    counts: np.ndarray
    total: int
    keys: np.ndarray | None = None

    @property
    def d(self) -> int:
        return len(self.edges)

    @property
    def bins_per_dim(self) -> int:
        return len(self.edges[0]) - 1

    @property
    def n_bins(self) -> int:
        return self.bins_per_dim ** self.d

    @property
    def is_sparse(self) -> bool:
        return self.keys is not None

    def same_grid(self, other: "HistogramGrid") -> bool:
        return (self.d == other.d and self.bins_per_dim == other.bins_per_dim
                and all(np.array_equal(e, f) for e, f in zip(self.edges, other.edges)))

    def dense_counts(self) -> np.ndarray:
        if self.keys is None:
            return self.counts
        if self.n_bins > DEFAULT_BIN_BUDGET:
            raise ResourceError(f"dense view of {self.n_bins} bins exceeds budget {DEFAULT_BIN_BUDGET}")
        out = np.zeros(self.n_bins, dtype=np.int64)
        out[self.keys] = self.counts
        return out

    def bin_volume(self) -> float:
        return float(np.prod([e[1] - e[0] for e in self.edges]))

    def merge(self, other: "HistogramGrid") -> "HistogramGrid":
        """Count-wise sum of two histograms on the same grid."""
        if not self.same_grid(other):
            raise ParameterError("cannot merge histograms on different grids")
        if self.keys is None and other.keys is None:
            return HistogramGrid(self.edges, self.counts + other.counts, self.total + other.total)
        keys = np.concatenate([_occupied(self)[0], _occupied(other)[0]])
        vals = np.concatenate([_occupied(self)[1], _occupied(other)[1]])
        uniq, inv = np.unique(keys, return_inverse=True)
        return HistogramGrid(self.edges, np.bincount(inv, weights=vals).astype(np.int64),
                             self.total + other.total, uniq)


def _occupied(g: HistogramGrid):
    if g.keys is not None:
        return g.keys, g.counts
    nz = np.flatnonzero(g.counts)
    return nz, g.counts[nz]


def aligned_counts(p: HistogramGrid, q: HistogramGrid) -> tuple[np.ndarray, np.ndarray]:
    """Count vectors of ``p`` and ``q`` over the bins occupied by either.

    Bins empty in both contribute nothing to any bin-wise divergence, so they
    are dropped.  Raises ParameterError when the grids differ.
    """
    if not p.same_grid(q):
        raise ParameterError("histograms are on different grids")
    if p.keys is None and q.keys is None:
        both = (p.counts > 0) | (q.counts > 0)
        return p.counts[both], q.counts[both]
    kp, cp = _occupied(p)
    kq, cq = _occupied(q)
    keys = np.union1d(kp, kq)
    a = np.zeros(keys.size, dtype=np.int64)
    b = np.zeros(keys.size, dtype=np.int64)
    a[np.searchsorted(keys, kp)] = cp
    b[np.searchsorted(keys, kq)] = cq
    return a, b


def bin_indices(s: np.ndarray, k: int, rng: BinRange) -> np.ndarray:
    """Per-dimension bin index of each row; out-of-range rows clip to the boundary bins."""
    scaled = (s - rng.lo) / (rng.hi - rng.lo) * k
    idx = np.floor(scaled)
    np.clip(idx, 0, k - 1, out=idx)
    return idx.astype(np.int64)


def build_histogram(s, k: int, rng: BinRange, *, bin_budget: int = DEFAULT_BIN_BUDGET,
                    sparse: bool | None = None) -> HistogramGrid:
    """Count the rows of ``s`` in ``k`` equal-width bins per dimension.

    ``sparse=None`` picks dense storage up to ``bin_budget`` cells and the
    occupied-cell representation above it; ``sparse=False`` turns an
    over-budget grid into a :class:`ResourceError` instead.
    """
    s = as_sample_matrix(s)
    k = int(k)
    if k < 1:
        raise ParameterError(f"bins per dimension must be >= 1, got {k}")
    if s.shape[1] != rng.dim:
        raise ParameterError(f"range has {rng.dim} dims, samples have {s.shape[1]}")
    d = s.shape[1]
    n_bins = k**d
    if n_bins > _MAX_FLAT_INDEX:
        raise ResourceError(f"{k}^{d} bins cannot be indexed")
    if sparse is None:
        sparse = n_bins > bin_budget
    elif not sparse and n_bins > bin_budget:
        raise ResourceError(f"{k}^{d} = {n_bins} bins exceeds the dense bin budget {bin_budget}")

    edges = tuple(np.linspace(lo, hi, k + 1) for lo, hi in zip(rng.lo, rng.hi))
    idx = bin_indices(s, k, rng)
    flat = np.ravel_multi_index(tuple(idx.T), (k,) * d)
    if sparse:
        keys, counts = np.unique(flat, return_counts=True)
        return HistogramGrid(edges, counts.astype(np.int64), s.shape[0], keys)
    return HistogramGrid(edges, np.bincount(flat, minlength=n_bins).astype(np.int64), s.shape[0])


def bin_centers(g: HistogramGrid) -> np.ndarray:
    """``(K**d, d)`` array of bin midpoints in the same row-major order as the counts."""
    mids = [0.5 * (e[:-1] + e[1:]) for e in g.edges]
    mesh = np.meshgrid(*mids, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def to_probability_vector(g: HistogramGrid) -> np.ndarray:
    if g.total < 1:
        raise ParameterError("histogram holds no samples")
    return g.dense_counts() / g.total


def to_density(g: HistogramGrid) -> np.ndarray:
    """Piecewise-constant density value of every bin, ``n_i / (N * vol)``."""
    return to_probability_vector(g) / g.bin_volume()


def dump_histogram_csv(g: HistogramGrid, path: str | PathLike) -> None:
    """Write occupied bins as ``i_0, ..., i_{d-1}, count`` rows."""
    keys, counts = _occupied(g)
    multi = np.unravel_index(keys, (g.bins_per_dim,) * g.d)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{j}" for j in range(g.d)] + ["count"])
        for row in zip(*multi, counts):
            w.writerow([int(v) for v in row])

"""KL divergence from k-nearest-neighbour distances.

For every ``x_i`` the estimator compares the distance to its k-th neighbour
among the other ``x`` rows (``r_k``) with the distance to its k-th
neighbour in ``y`` (``s_k``)::

    D = (d / N) * sum_i log(s_k(x_i) / r_k(x_i)) + log(N / (N - 1))

Neighbour search is exact.  A k-d tree is used up to ten dimensions and a
blocked brute-force scan above that; both return the same distances.
Ties are resolved by index order, which does not affect the distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInputError, ParameterError
from .scenarios import as_sample_matrix, make_rng

KDTREE_MAX_DIM = 10
_BRUTE_BLOCK = 2048


@dataclass(frozen=True)
class KnnConfig:
    """``k``: neighbour order.  ``jitter``: relative scale of an optional
    uniform perturbation used to split exact duplicates (0 disables it).
    """

    k: int = 1
    jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k}")
        if not (self.jitter >= 0 and math.isfinite(self.jitter)):
            raise ParameterError(f"jitter must be finite and >= 0, got {self.jitter}")
        object.__setattr__(self, "k", int(self.k))


def _brute_kth(queries: np.ndarray, ref: np.ndarray, k: int) -> np.ndarray:
    # direct differences, no Gram-matrix shortcut
    out = np.empty(queries.shape[0])
    step = max(1, _BRUTE_BLOCK * 64 // max(ref.shape[0] * ref.shape[1], 1))
    for s in range(0, queries.shape[0], step):
        qb = queries[s:s + step]
        dist = np.sqrt(((qb[:, None, :] - ref[None, :, :]) ** 2).sum(axis=2))
        out[s:s + step] = np.partition(dist, k - 1, axis=1)[:, k - 1]
    return out


def kth_neighbor_distances(queries, ref, k: int, *, exclude_self: bool = False,
                           method: str = "auto") -> np.ndarray:
    """Distance from each query row to its ``k``-th nearest row of ``ref``.

    With ``exclude_self`` the query set is ``ref`` itself and each point's
    own zero distance is skipped.
    """
    queries = as_sample_matrix(queries, "queries")
    ref = as_sample_matrix(ref, "ref")
    kk = k + 1 if exclude_self else k
    if kk > ref.shape[0]:
        raise ParameterError(f"k={k} needs more than {ref.shape[0]} reference points")
    if method == "auto":
        method = "kdtree" if ref.shape[1] <= KDTREE_MAX_DIM else "brute"
    if method == "kdtree":
        dist, _ = cKDTree(ref).query(queries, k=[kk])
        return dist[:, 0]
    if method == "brute":
        return _brute_kth(queries, ref, kk)
    raise ParameterError(f"unknown neighbour search method {method!r}")


def _jitter(a: np.ndarray, scale: float, rng: np.random.Generator) -> np.ndarray:
    return a + rng.uniform(-scale, scale, size=a.shape)


def kl_knn(x, y, cfg: KnnConfig | None = None, *, method: str = "auto") -> float:
    """k-NN estimate of KL(P || Q) in nats from ``x ~ P`` and ``y ~ Q``.

    Parameters
    ----------
    x, y : array_like, shape (N, d)
        Equal-size sample sets.
    cfg : KnnConfig, optional
        Neighbour order and duplicate handling; defaults to ``k=1``.
    method : {"auto", "kdtree", "brute"}
        Neighbour search backend.

    Returns
    -------
    float
        The estimate.  It can be negative for small ``N``.

    Raises
    ------
    DegenerateInputError
        A point of ``x`` (or of ``y``) coincides with ``k`` other points so a
        neighbour distance is zero.
    """
    cfg = cfg or KnnConfig()
    x = as_sample_matrix(x, "x")
    y = as_sample_matrix(y, "y")
    n, d = x.shape
    if y.shape[1] != d:
        raise ParameterError(f"dimension mismatch: {d} vs {y.shape[1]}")
    if y.shape[0] != n:
        raise ParameterError(f"x and y must hold the same number of samples ({n} vs {y.shape[0]})")
    if cfg.k >= n:
        raise ParameterError(f"k={cfg.k} must be smaller than N={n}")

    if cfg.jitter > 0:
        scale = cfg.jitter * max(float(np.abs(x).max()), float(np.abs(y).max()), 1.0)
        rng = make_rng(cfg.seed, 0)
        x = _jitter(x, scale, rng)
        y = _jitter(y, scale, rng)

    r = kth_neighbor_distances(x, x, cfg.k, exclude_self=True, method=method)
    s = kth_neighbor_distances(x, y, cfg.k, method=method)
    bad = np.flatnonzero(r == 0)
    if bad.size:
        raise DegenerateInputError(
            f"x[{bad[0]}] has a zero distance to its {cfg.k}-th neighbour within x (duplicate points)")
    bad = np.flatnonzero(s == 0)
    if bad.size:
        raise DegenerateInputError(
            f"x[{bad[0]}] has a zero distance to its {cfg.k}-th neighbour in y (duplicate points)")
    return d / n * math.fsum(np.log(s / r)) + math.log(n / (n - 1))

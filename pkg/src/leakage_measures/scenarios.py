"""Sample generators for the secret-sharing leakage scenarios.

Two scenarios are supported:

``share``
    A secret ``X ~ N(0, sx2)`` and one share ``X - R`` with ``R ~ N(0, sr2)``.
    Rows are ``(x, x - r)``.

``three_party_mult``
    Party 1's view of a three-party multiplication of ``s`` and ``t`` under
    degree-1 real Shamir sharing with evaluation points ``(-1, 1, 2)``.
    Rows are ``(s, 2s - r_s, 2t - r_t, r_t * r_s, (-s + 2r_s)(-t + 2r_t))``.

Column 0 is always the secret; the remaining columns are the adversary view.

Random streams
--------------
Every draw uses numpy's ``Philox`` (4x64, 10 rounds) counter-based bit
generator, keyed through ``SeedSequence([seed, stream])``.  The joint sample
uses ``stream=0`` and the product-of-marginals sample ``stream=1``, so the
two sample sets for one seed are independent of each other.  The generator
name is exposed as :data:`RNG_ALGORITHM` for output metadata.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from os import PathLike

import numpy as np

from .errors import ParameterError, SingularityError

RNG_ALGORITHM = "numpy.Philox4x64-10/SeedSequence"

PSD_TOL = 1e-10

JOINT_STREAM = 0
PRODUCT_STREAM = 1
GAUSSIAN_STREAM = 2


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the package's reproducible generator for ``(seed, stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def as_sample_matrix(data, name: str = "samples") -> np.ndarray:
    """Coerce ``data`` into an ``(N, d)`` float64 array of finite values.

    One-dimensional input is read as ``N`` scalar observations.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ParameterError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"{name} must contain at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class GaussianSpec:
    """Multivariate normal distribution ``N(mean, covariance)``."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=np.float64))
        if mean.ndim != 1:
            raise ParameterError("mean must be a vector")
        d = mean.size
        if cov.shape != (d, d):
            raise ParameterError(f"covariance must be {d}x{d}, got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise ParameterError("mean and covariance must be finite")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-12):
            raise ParameterError("covariance must be symmetric")
        cov = 0.5 * (cov + cov.T)
        if np.linalg.eigvalsh(cov).min() < -PSD_TOL:
            raise SingularityError("covariance is not positive semi-definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


class ScenarioKind(str, enum.Enum):
    SHARE = "share"
    THREE_PARTY_MULT = "three_party_mult"

    @classmethod
    def parse(cls, value) -> "ScenarioKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"share": cls.SHARE, "threepartymult": cls.THREE_PARTY_MULT,
                   "three_party_mult": cls.THREE_PARTY_MULT, "mult": cls.THREE_PARTY_MULT}
        try:
            return aliases[key]
        except KeyError:
            raise ParameterError(f"unknown scenario kind {value!r}") from None


@dataclass(frozen=True)
class ScenarioSpec:
    kind: ScenarioKind = ScenarioKind.SHARE
    sigma_x_sq: float = 1.0
    sigma_r_sq: float = 10.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", ScenarioKind.parse(self.kind))
        for name in ("sigma_x_sq", "sigma_r_sq"):
            value = float(getattr(self, name))
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be a positive finite number, got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def dim(self) -> int:
        return 2 if self.kind is ScenarioKind.SHARE else 5

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return ScenarioSpec(self.kind, self.sigma_x_sq, self.sigma_r_sq, seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sigma_x_sq": self.sigma_x_sq,
                "sigma_r_sq": self.sigma_r_sq, "seed": self.seed}

    @classmethod
    def from_dict(cls, cfg: dict) -> "ScenarioSpec":
        unknown = set(cfg) - {"kind", "sigma_x_sq", "sigma_r_sq", "seed"}
        if unknown:
            raise ParameterError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**cfg)

    @classmethod
    def from_json(cls, path: str | PathLike) -> "ScenarioSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _check_count(n) -> int:
    if int(n) != n or n < 1:
        raise ParameterError(f"sample count must be a positive integer, got {n}")
    return int(n)


def _psd_factor(cov: np.ndarray) -> np.ndarray:
    """Return ``L`` with ``L @ L.T == cov``; Cholesky first, eigen fallback."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(cov)
        if w.min() < -PSD_TOL:
            raise SingularityError("covariance is not positive semi-definite") from None
        return v * np.sqrt(np.clip(w, 0.0, None))


def sample_gaussian(spec: GaussianSpec, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. rows from ``spec``; deterministic in ``seed``."""
    n = _check_count(n)
    rng = make_rng(seed, GAUSSIAN_STREAM)
    z = rng.standard_normal((n, spec.dim))
    return spec.mean + z @ _psd_factor(spec.covariance).T


def _share_draws(rng: np.random.Generator, n: int, sx: float, sr: float):
    x = sx * rng.standard_normal(n)
    r = sr * rng.standard_normal(n)
    return x, r


def _draw_joint(kind: ScenarioKind, sigma_x_sq: float, sigma_r_sq: float,
                rng: np.random.Generator, n: int) -> np.ndarray:
    # no variance validation here: the degenerate zero-variance case is a test hook
    sx, sr = np.sqrt(sigma_x_sq), np.sqrt(sigma_r_sq)
    if kind is ScenarioKind.SHARE:
        x, r = _share_draws(rng, n, sx, sr)
        return np.column_stack((x, x - r))
    s = sx * rng.standard_normal(n)
    t = sx * rng.standard_normal(n)
    r_s = sr * rng.standard_normal(n)
    r_t = sr * rng.standard_normal(n)
    return np.column_stack((s, 2 * s - r_s, 2 * t - r_t, r_t * r_s, (-s + 2 * r_s) * (-t + 2 * r_t)))


def sample_joint(scn: ScenarioSpec, n: int) -> np.ndarray:
    """Rows of (secret, view...) drawn from the scenario's joint distribution."""
    n = _check_count(n)
    return _draw_joint(scn.kind, scn.sigma_x_sq, scn.sigma_r_sq, make_rng(scn.seed, JOINT_STREAM), n)


def sample_product_of_marginals(scn: ScenarioSpec, n: int) -> np.ndarray:
    """Rows with the secret column taken from an independent replica.

    Two joint batches ``A`` and ``B`` are drawn from one stream; the result
    is ``A[:, 0]`` spliced with ``B[:, 1:]``.  Every column keeps its exact
    marginal while the secret becomes independent of the view.
    """
    n = _check_count(n)
    rng = make_rng(scn.seed, PRODUCT_STREAM)
    a = _draw_joint(scn.kind, scn.sigma_x_sq, scn.sigma_r_sq, rng, n)
    b = _draw_joint(scn.kind, scn.sigma_x_sq, scn.sigma_r_sq, rng, n)
    b[:, 0] = a[:, 0]
    return b


def joint_gaussian(scn: ScenarioSpec) -> GaussianSpec:
    """Exact law of the ``share`` scenario's joint sample (zero means)."""
    if scn.kind is not ScenarioKind.SHARE:
        raise ParameterError("closed-form law only exists for the share scenario")
    sx2, sr2 = scn.sigma_x_sq, scn.sigma_r_sq
    return GaussianSpec(np.zeros(2), np.array([[sx2, sx2], [sx2, sx2 + sr2]]))


def marginal_product_gaussian(scn: ScenarioSpec) -> GaussianSpec:
    """Exact law of the ``share`` scenario's product-of-marginals sample."""
    if scn.kind is not ScenarioKind.SHARE:
        raise ParameterError("closed-form law only exists for the share scenario")
    sx2, sr2 = scn.sigma_x_sq, scn.sigma_r_sq
    return GaussianSpec(np.zeros(2), np.diag([sx2, sx2 + sr2]))

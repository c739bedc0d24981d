"""Closed-form reference values for Gaussian leakage scenarios.

All KL values are in nats.  The JS mixture bound is reported in bits by
default because the JS <= TV <= 1 chain it is compared against only holds
for base-2 logarithms.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError, SingularityError
from .scenarios import GaussianSpec, ScenarioSpec, ScenarioKind, joint_gaussian, marginal_product_gaussian


def to_base(value_nats: float, base) -> float:
    """Convert a nats value to ``base`` (``"e"``, ``2`` or any positive number)."""
    if base in ("e", "nats", "natural", None):
        return float(value_nats)
    if base in (2, "2", "bits", "base2"):
        return float(value_nats) / math.log(2.0)
    base = float(base)
    if base <= 0 or base == 1:
        raise ParameterError(f"invalid logarithm base {base}")
    return float(value_nats) / math.log(base)


def _check_pair(p: GaussianSpec, q: GaussianSpec):
    if p.dim != q.dim:
        raise ParameterError(f"dimension mismatch: {p.dim} vs {q.dim}")


def gaussian_kl(p: GaussianSpec, q: GaussianSpec) -> float:
    """KL(p || q) between multivariate normals, in nats."""
    _check_pair(p, q)
    try:
        lq = np.linalg.cholesky(q.covariance)
        lp = np.linalg.cholesky(p.covariance)
    except np.linalg.LinAlgError:
        raise SingularityError("gaussian_kl needs positive definite covariances") from None
    d = p.dim
    # tr(Sq^-1 Sp) = ||Lq^-1 Lp||_F^2
    a = np.linalg.solve(lq, lp)
    diff = np.linalg.solve(lq, q.mean - p.mean)
    logdet_q = 2.0 * np.sum(np.log(np.diag(lq)))
    logdet_p = 2.0 * np.sum(np.log(np.diag(lp)))
    return 0.5 * (np.sum(a * a) + diff @ diff - d + logdet_q - logdet_p)


def _share_kl(sigma_x_sq: float, sigma_r_sq: float) -> float:
    return 0.5 * math.log1p(sigma_x_sq / sigma_r_sq)


def share_scenario_kl(sigma_x_sq: float, sigma_r_sq: float) -> float:
    """Mutual information ``I(X; X - R)`` in nats for the share scenario."""
    if not (sigma_x_sq > 0 and sigma_r_sq > 0):
        raise ParameterError("variances must be positive")
    return _share_kl(sigma_x_sq, sigma_r_sq)


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix, eigenvalues clamped at 0."""
    a = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(a)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    if w.min(initial=0.0) < -1e-10 * scale:
        raise SingularityError("matrix square root of a non-PSD matrix")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _cross_trace(s1: np.ndarray, s2: np.ndarray) -> float:
    r2 = psd_sqrt(s2)
    return float(np.trace(psd_sqrt(r2 @ s1 @ r2)))


def gaussian_w2(p: GaussianSpec, q: GaussianSpec) -> float:
    """Wasserstein-2 distance between two normals (Euclidean ground cost).

    ``sqrt(||mp - mq||^2 + tr(S1 + S2 - 2 (S2^1/2 S1 S2^1/2)^1/2))``.  The
    cross trace is evaluated in both argument orders and averaged, which
    makes the result exactly symmetric.  Near zero the cancellation limits
    absolute accuracy to about ``sqrt(1e-16 * tr(S1 + S2))``.
    """
    _check_pair(p, q)
    s1, s2 = p.covariance, q.covariance
    cross = 0.5 * (_cross_trace(s1, s2) + _cross_trace(s2, s1))
    dm = p.mean - q.mean
    val = (np.trace(s1) + np.trace(s2)) - 2.0 * cross + dm @ dm
    return math.sqrt(max(val, 0.0))


def js_upper_bound_gmm(p: GaussianSpec, q: GaussianSpec, base=2) -> float:
    """Upper bound on JS(p, q) from the two Gaussian KL divergences.

    Each half of the JS divergence is a KL against the equal-weight mixture
    of ``p`` and ``q``; bounding those with the closed-form Gaussian KLs
    gives ``-1/2 log((1 + e^-KL(p||q))/2) - 1/2 log((1 + e^-KL(q||p))/2)``.
    """
    kpq = gaussian_kl(p, q)
    kqp = gaussian_kl(q, p)
    nats = -0.5 * math.log(0.5 * (1.0 + math.exp(-kpq))) - 0.5 * math.log(0.5 * (1.0 + math.exp(-kqp)))
    return to_base(max(nats, 0.0), base)


def tv_upper_bounds(kl: float) -> tuple[float, float]:
    """Pinsker and Bretagnolle-Huber upper bounds on TV from KL (nats)."""
    if not kl >= 0:
        raise ParameterError(f"kl must be non-negative, got {kl}")
    if math.isinf(kl):
        return math.inf, 1.0
    return math.sqrt(kl / 2.0), math.sqrt(-math.expm1(-kl))


def tv_upper_bound(kl: float) -> float:
    return min(tv_upper_bounds(kl))


@dataclass(frozen=True)
class OracleReport:
    kl_exact: float
    tv_upper: float
    js_upper: float
    w2_exact: float
    tv_pinsker: float
    tv_bretagnolle: float

    def to_dict(self) -> dict:
        return asdict(self)


def share_oracle(scn: ScenarioSpec) -> OracleReport:
    """Every closed-form reference value for the share scenario."""
    if scn.kind is not ScenarioKind.SHARE:
        raise ParameterError("no closed-form oracle for the three-party scenario")
    joint, prod = joint_gaussian(scn), marginal_product_gaussian(scn)
    kl = share_scenario_kl(scn.sigma_x_sq, scn.sigma_r_sq)
    pinsker, bh = tv_upper_bounds(kl)
    return OracleReport(
        kl_exact=kl,
        tv_upper=min(pinsker, bh),
        js_upper=js_upper_bound_gmm(joint, prod, base=2),
        w2_exact=gaussian_w2(joint, prod),
        tv_pinsker=pinsker,
        tv_bretagnolle=bh,
    )

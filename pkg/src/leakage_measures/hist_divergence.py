"""Bin-wise KL, TV and JS divergences between two histograms on one grid."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .histogram import HistogramGrid, aligned_counts

EMPTY_BIN_FILL = 1e-8


class LogBase(str, enum.Enum):
    NATURAL = "natural"
    BASE2 = "base2"

    @classmethod
    def parse(cls, value) -> "LogBase":
        if isinstance(value, cls):
            return value
        if value in ("e", "nats", "natural", None):
            return cls.NATURAL
        if value in (2, "2", "bits", "base2"):
            return cls.BASE2
        raise ParameterError(f"unsupported log base {value!r}")

    @property
    def log_scale(self) -> float:
        return 1.0 if self is LogBase.NATURAL else 1.0 / math.log(2.0)


@dataclass(frozen=True)
class DivergenceValue:
    kind: str
    value: float
    log_base: LogBase = LogBase.NATURAL
    fill_used: bool = False

    def __float__(self) -> float:
        return self.value


def _paired(p: HistogramGrid, q: HistogramGrid):
    if p.total != q.total:
        raise ParameterError(f"histograms hold different sample counts ({p.total} vs {q.total})")
    if p.total < 1:
        raise ParameterError("empty histograms")
    a, b = aligned_counts(p, q)
    return a.astype(np.float64), b.astype(np.float64), float(p.total)


def _xlogy_terms(x: np.ndarray, num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # 0 * log(.) := 0
    out = np.zeros_like(x)
    m = x > 0
    out[m] = x[m] * np.log(num[m] / den[m])
    return out


def kl_hist(p: HistogramGrid, q: HistogramGrid, base="natural",
            fill: float = EMPTY_BIN_FILL) -> DivergenceValue:
    """``sum_i (n_p,i / N) log(n_p,i / max(n_q,i, fill))``.

    Bins with ``n_p,i == 0`` contribute zero.  Empty ``q`` bins are replaced
    by ``fill`` raw counts, which keeps the sum finite at the cost of a large
    positive contribution from unmatched support.
    """
    base = LogBase.parse(base)
    a, b, n = _paired(p, q)
    filled = np.any((a > 0) & (b == 0))
    b_fill = np.maximum(b, fill)
    value = math.fsum(_xlogy_terms(a, a, b_fill)) / n
    return DivergenceValue("KL", value * base.log_scale, base, bool(filled))


def tv_hist(p: HistogramGrid, q: HistogramGrid) -> DivergenceValue:
    a, b, n = _paired(p, q)
    return DivergenceValue("TV", 0.5 * math.fsum(np.abs(a - b)) / n)


def js_hist(p: HistogramGrid, q: HistogramGrid, base="natural") -> DivergenceValue:
    """Jensen-Shannon divergence against the count-average histogram."""
    base = LogBase.parse(base)
    a, b, n = _paired(p, q)
    s = a + b
    terms = _xlogy_terms(a, 2.0 * a, s) + _xlogy_terms(b, 2.0 * b, s)
    value = 0.5 * math.fsum(terms) / n
    return DivergenceValue("JS", max(value, 0.0) * base.log_scale, base)


def histogram_divergences(p: HistogramGrid, q: HistogramGrid, js_base="base2") -> dict[str, DivergenceValue]:
    return {"kl": kl_hist(p, q), "tv": tv_hist(p, q), "js": js_hist(p, q, base=js_base)}

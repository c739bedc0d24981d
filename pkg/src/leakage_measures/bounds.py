"""Inequalities linking KL, TV, JS and W1, evaluated as predicates.

Each relation is stored as ``lhs <= rhs`` with ``slack = rhs - lhs``; it is
satisfied when ``slack >= -tol``.  A relation that cannot be evaluated is
kept in the report with a status explaining why.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .hist_divergence import DivergenceValue, LogBase

SATISFIED = "satisfied"
VIOLATED = "violated"
SKIPPED_VACUOUS = "skipped-vacuous"
SKIPPED_UNBOUNDED = "skipped-unbounded"

RELATION_IDS = ("js_le_tv", "tv_le_1", "pinsker", "bretagnolle", "w1_lower", "w1_upper")


@dataclass(frozen=True)
class Relation:
    relation_id: str
    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    status: str = SATISFIED

    @property
    def applicable(self) -> bool:
        return self.status in (SATISFIED, VIOLATED)


@dataclass(frozen=True)
class BoundReport:
    relations: tuple
    tol: float

    def __getitem__(self, relation_id: str) -> Relation:
        for r in self.relations:
            if r.relation_id == relation_id:
                return r
        raise KeyError(relation_id)

    def __iter__(self):
        return iter(self.relations)

    @property
    def all_satisfied(self) -> bool:
        return all(r.satisfied for r in self.relations)

    def as_flags(self) -> dict:
        """``relation_id -> bool`` for applicable relations only."""
        return {r.relation_id: r.satisfied for r in self.relations if r.applicable}


def _relation(rid, lhs, rhs, tol) -> Relation:
    slack = rhs - lhs
    ok = slack >= -tol
    return Relation(rid, lhs, rhs, ok, slack, SATISFIED if ok else VIOLATED)


def _skipped(rid, lhs, rhs, status) -> Relation:
    slack = rhs - lhs if math.isfinite(rhs) else math.inf
    return Relation(rid, lhs, rhs, True, slack, status)


def _as_js_bits(js) -> float:
    if isinstance(js, DivergenceValue):
        if js.log_base is not LogBase.BASE2:
            raise ParameterError("the JS <= TV chain needs JS in bits; got a natural-log value")
        return js.value
    return float(js)


def check_relations(kl, tv, js_base2, w1=0.0, d_min=0.0, diam=math.inf, tol=0.0) -> BoundReport:
    """Evaluate every analytic relation between the supplied quantities.

    Parameters
    ----------
    kl : float
        KL divergence in nats.
    tv : float
        Total variation distance.
    js_base2 : float or DivergenceValue
        JS divergence in bits.  A :class:`DivergenceValue` flagged as natural
        log is rejected.
    w1 : float
        Wasserstein-1 distance.
    d_min, diam : float
        Smallest nonzero distance and diameter of the ground space.
        ``d_min = 0`` makes the lower W1 bound vacuous and infinite ``diam``
        drops the upper one; both are then reported as skipped.
    tol : float
        Allowed violation.
    """
    kl, tv, w1, d_min, diam, tol = (float(v) for v in (kl, tv, w1, d_min, diam, tol))
    js = _as_js_bits(js_base2)
    for name, v in (("kl", kl), ("tv", tv), ("js_base2", js), ("w1", w1),
                    ("d_min", d_min), ("diam", diam), ("tol", tol)):
        if not v >= 0:
            raise ParameterError(f"{name} must be >= 0, got {v}")

    pinsker = math.sqrt(kl / 2.0)
    bretagnolle = math.sqrt(-math.expm1(-kl))
    rel = [
        _relation("js_le_tv", js, tv, tol),
        _relation("tv_le_1", tv, 1.0, tol),
        _relation("pinsker", tv, pinsker, tol),
        _relation("bretagnolle", tv, bretagnolle, tol),
    ]
    if d_min > 0:
        # tv * d_min <= w1
        rel.append(_relation("w1_lower", tv * d_min, w1, tol))
    else:
        rel.append(_skipped("w1_lower", 0.0, w1, SKIPPED_VACUOUS))
    if math.isfinite(diam):
        rel.append(_relation("w1_upper", w1, diam * tv, tol))
    else:
        rel.append(_skipped("w1_upper", w1, math.inf, SKIPPED_UNBOUNDED))
    return BoundReport(tuple(rel), tol)


def w1_le_w2(w1: float, w2: float, tol: float = 0.0) -> Relation:
    """Monotonicity of Wasserstein distances in the order: ``W1 <= W2``."""
    return _relation("w1_le_w2", float(w1), float(w2), tol)

"""Ontology-weighted node alignment between student and gold graphs.

Pair weights mix taxonomy similarity with Bloom agreement; the alignment is
the maximum-total-weight one-to-one matching over admissible pairs, solved
as an optimal assignment. Unmatched nodes are allowed on both sides.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .ontology import Ontology
from .srg import SrgNode

OA_NORM_MAX = "max"
OA_NORM_SUM = "sum"


@dataclass(frozen=True)
class AlignmentParams:
    alpha: float = 0.5  # semantic vs Bloom-agreement mix
    w_min: float = 0.3  # minimum admissible pair weight
    oa_norm: str = OA_NORM_MAX

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")
        if not 0.0 <= self.w_min <= 1.0:
            raise ValueError(f"w_min must be in [0,1], got {self.w_min}")
        if self.oa_norm not in (OA_NORM_MAX, OA_NORM_SUM):
            raise ValueError(f"oa_norm must be 'max' or 'sum', got {self.oa_norm!r}")


@dataclass(frozen=True)
class AlignedPair:
    student_id: str
    gold_id: str
    weight: float


@dataclass(frozen=True)
class Alignment:
    pairs: tuple[AlignedPair, ...]

    @property
    def total_weight(self) -> float:
        return float(sum(p.weight for p in self.pairs))

    def student_to_gold(self) -> dict[str, str]:
        return {p.student_id: p.gold_id for p in self.pairs}

    def gold_to_student(self) -> dict[str, str]:
        return {p.gold_id: p.student_id for p in self.pairs}

    def to_obj(self) -> dict:
        return {"pairs": [[p.student_id, p.gold_id, p.weight] for p in self.pairs]}


def pair_weight(vs: SrgNode, vo: SrgNode, o: Ontology, p: AlignmentParams) -> float:
    """alpha * sim(concepts) + (1 - alpha) * [blooms equal]."""
    sim = o.sim_or_zero(vs.concept, vo.concept)
    return p.alpha * sim + (1.0 - p.alpha) * (1.0 if vs.bloom == vo.bloom else 0.0)


def _weight_matrix(vs: Sequence[SrgNode], vo: Sequence[SrgNode], o: Ontology, p: AlignmentParams):
    w = np.zeros((len(vs), len(vo)))
    for i, s in enumerate(vs):
        for j, g in enumerate(vo):
            w[i, j] = pair_weight(s, g, o, p)
    return w


def _admissible(w: np.ndarray, w_min: float) -> np.ndarray:
    # Zero-weight pairs add nothing to the objective; keep them out so the
    # alignment only contains meaningful matches.
    return (w >= w_min) & (w > 0.0)


def _optimum(profit: np.ndarray) -> float:
    """Max total over one-to-one matchings restricted to positive cells."""
    if profit.size == 0 or not (profit > 0).any():
        return 0.0
    rows, cols = linear_sum_assignment(profit, maximize=True)
    return float(profit[rows, cols].sum())


def best_alignment(
    vs: Sequence[SrgNode],
    vo: Sequence[SrgNode],
    o: Ontology,
    p: AlignmentParams,
) -> Alignment:
    """Optimal one-to-one matching over pairs with weight >= w_min.

    Deterministic: among equal-weight optima the lexicographically smallest
    (student id, gold id) pair sequence is returned, found by greedily fixing
    candidate pairs in id order and keeping each only if an optimal
    completion still exists.
    """
    vs = sorted(vs, key=lambda n: n.id)
    vo = sorted(vo, key=lambda n: n.id)
    if not vs or not vo:
        return Alignment(pairs=())

    w = _weight_matrix(vs, vo, o, p)
    mask = _admissible(w, p.w_min)
    profit = np.where(mask, w, 0.0)
    best_total = _optimum(profit)
    if best_total <= 0.0:
        return Alignment(pairs=())

    # Greedy lexicographic refinement. Candidates are visited in
    # (student id, gold id) order; a candidate is kept iff fixing it (and all
    # previously kept pairs) still admits a completion reaching best_total.
    eps = 1e-9
    kept: list[tuple[int, int]] = []
    kept_weight = 0.0
    free_rows = list(range(len(vs)))
    free_cols = list(range(len(vo)))
    for i in range(len(vs)):
        if i not in free_rows:
            continue
        for j in sorted(free_cols):
            if not mask[i, j]:
                continue
            trial_rows = [r for r in free_rows if r != i]
            trial_cols = [c for c in free_cols if c != j]
            rest = profit[np.ix_(trial_rows, trial_cols)] if trial_rows and trial_cols else np.zeros((0, 0))
            achievable = kept_weight + w[i, j] + _optimum(rest)
            if achievable >= best_total - eps:
                kept.append((i, j))
                kept_weight += w[i, j]
                free_rows = trial_rows
                free_cols = trial_cols
                break

    pairs = tuple(AlignedPair(vs[i].id, vo[j].id, float(w[i, j])) for i, j in kept)
    return Alignment(pairs=pairs)


def f_oa(a: Alignment, vs: Sequence[SrgNode], vo: Sequence[SrgNode], p: AlignmentParams) -> float:
    """Total alignment weight normalized by graph size; in [0,1].

    oa_norm selects the denominator: max(|Vs|, |Vo|) keeps the identity
    score at 1, while 'sum' uses |Vs| + |Vo|. Two empty graphs score 1.
    """
    ns, no = len(vs), len(vo)
    if ns == 0 and no == 0:
        return 1.0
    denom = max(ns, no) if p.oa_norm == OA_NORM_MAX else ns + no
    return a.total_weight / denom

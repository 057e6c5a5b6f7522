"""Composite similarity, dominant Bloom extraction, proficiency banding.

The composite score folds a normalized edit distance and the alignment
shortfall into one number in [0,1]:

    s = clamp(1 - (gamma1 * ged/z + gamma2 * (1 - f_oa)), 0, 1)

Everything here is deterministic and model-agnostic: same graphs and
parameters give bit-identical breakdowns.
"""
from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field, replace

from .alignment import Alignment, AlignmentParams, best_alignment, f_oa
from .errors import EmptyTrainingSet
from .ged import EXACT_LIMIT_DEFAULT, EditCostModel, ged_auto, normalizer_z
from .ontology import Ontology
from .srg import BloomLevel, Srg

TAU_DEFAULT = 0.75


class Band(str, enum.Enum):
    BEGINNING = "Beginning"
    DEVELOPING = "Developing"
    PROFICIENT = "Proficient"


@dataclass(frozen=True)
class ScoringParams:
    gamma1: float = 0.5  # edit-distance weight
    gamma2: float = 0.5  # alignment weight
    tau: float = TAU_DEFAULT
    band_thresholds: tuple[float, float] | None = None  # (t1, t2); t2 defaults to tau
    alignment: AlignmentParams = field(default_factory=AlignmentParams)
    costs: EditCostModel = field(default_factory=EditCostModel)
    exact_limit: int = EXACT_LIMIT_DEFAULT
    beam_width: int = 32

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("gamma weights must be >= 0")
        if abs(self.gamma1 + self.gamma2 - 1.0) > 1e-9:
            raise ValueError(f"gamma1 + gamma2 must equal 1, got {self.gamma1 + self.gamma2}")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0,1], got {self.tau}")
        if self.band_thresholds is None:
            object.__setattr__(self, "band_thresholds", (0.5, self.tau))
        t1, t2 = self.band_thresholds
        if not 0.0 <= t1 <= t2 <= 1.0:
            raise ValueError(f"band thresholds must satisfy 0 <= t1 <= t2 <= 1, got {self.band_thresholds}")

    def to_obj(self) -> dict:
        return {
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
            "tau": self.tau,
            "band_thresholds": list(self.band_thresholds),
            "alignment": {
                "alpha": self.alignment.alpha,
                "w_min": self.alignment.w_min,
                "oa_norm": self.alignment.oa_norm,
            },
            "costs": {
                "node_insert": self.costs.node_insert,
                "node_delete": self.costs.node_delete,
                "edge_insert": self.costs.edge_insert,
                "edge_delete": self.costs.edge_delete,
                "relation_mismatch": self.costs.relation_mismatch,
                "beta": self.costs.beta,
            },
            "exact_limit": self.exact_limit,
            "beam_width": self.beam_width,
        }

    @classmethod
    def from_obj(cls, data: dict) -> "ScoringParams":
        if not isinstance(data, dict):
            raise ValueError("scoring params must be an object")
        kwargs = {}
        for k in ("gamma1", "gamma2", "tau", "exact_limit", "beam_width"):
            if k in data:
                kwargs[k] = data[k]
        if data.get("band_thresholds") is not None:
            kwargs["band_thresholds"] = tuple(data["band_thresholds"])
        if "alignment" in data:
            kwargs["alignment"] = AlignmentParams(**data["alignment"])
        if "costs" in data:
            kwargs["costs"] = EditCostModel(**data["costs"])
        return cls(**kwargs)


@dataclass(frozen=True)
class SimilarityBreakdown:
    s: float
    ged_cost: float
    z: int
    f_oa: float
    alignment: Alignment
    dominant_bloom: BloomLevel | None
    band: Band

    def to_obj(self) -> dict:
        return {
            "s": self.s,
            "ged_cost": self.ged_cost,
            "z": self.z,
            "f_oa": self.f_oa,
            "alignment": self.alignment.to_obj(),
            "dominant_bloom": self.dominant_bloom.label if self.dominant_bloom else None,
            "band": self.band.value,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_obj(), indent=indent)


def band(s: float, p: ScoringParams) -> Band:
    """Beginning below t1, Developing in [t1, t2), Proficient at or above t2."""
    t1, t2 = p.band_thresholds
    if s < t1:
        return Band.BEGINNING
    if s < t2:
        return Band.DEVELOPING
    return Band.PROFICIENT


def dominant_bloom(a: Alignment, gs: Srg, s: float, tau: float) -> BloomLevel | None:
    """Mode of aligned student Bloom levels, reported only above tau.

    Ties break toward the lowest ordinal (under-crediting is the safe
    direction for formative feedback). None when gated or nothing aligned.
    """
    if s <= tau or not a.pairs:
        return None
    blooms = [gs.node(p.student_id).bloom for p in a.pairs]
    counts = Counter(blooms)
    top = max(counts.values())
    return min(b for b, c in counts.items() if c == top)


def similarity(gs: Srg, go: Srg, o: Ontology, p: ScoringParams) -> SimilarityBreakdown:
    """Full deterministic scoring of a student graph against gold."""
    a = best_alignment(gs.nodes, go.nodes, o, p.alignment)
    foa = f_oa(a, gs.nodes, go.nodes, p.alignment)
    ged = ged_auto(gs, go, p.costs, o, exact_limit=p.exact_limit, beam_width=p.beam_width)
    z = normalizer_z(gs, go)
    raw = 1.0 - (p.gamma1 * ged.cost / z + p.gamma2 * (1.0 - foa))
    s = min(1.0, max(0.0, raw))
    return SimilarityBreakdown(
        s=s,
        ged_cost=ged.cost,
        z=z,
        f_oa=foa,
        alignment=a,
        dominant_bloom=dominant_bloom(a, gs, s, p.tau),
        band=band(s, p),
    )


@dataclass(frozen=True)
class CalibrationRecord:
    student: Srg
    gold: Srg
    ontology: Ontology
    label: Band


def _gamma_grid(step: float = 0.05) -> list[float]:
    n = round(1.0 / step)
    return [round(i * step, 10) for i in range(n + 1)]


def calibrate(
    records: list[CalibrationRecord],
    base: ScoringParams | None = None,
    gamma1_grid: list[float] | None = None,
    alpha_grid: list[float] | None = None,
) -> ScoringParams:
    """Grid-search gamma1 (and optionally alpha) for banding accuracy.

    For fixed alignment and edit distance the score is affine in gamma1, so
    each record is scored once per alpha and the gamma sweep is analytic.
    Ties prefer gamma1 closest to 0.5, then the smaller gamma1 (same rule
    for alpha).
    """
    if not records:
        raise EmptyTrainingSet("calibration requires at least one labeled record")
    base = base or ScoringParams()
    gammas = gamma1_grid if gamma1_grid is not None else _gamma_grid()
    alphas = alpha_grid if alpha_grid is not None else [base.alignment.alpha]

    best_key = None
    best_params = None
    for alpha in alphas:
        align_params = replace(base.alignment, alpha=alpha)
        components = []
        for rec in records:
            a = best_alignment(rec.student.nodes, rec.gold.nodes, rec.ontology, align_params)
            foa = f_oa(a, rec.student.nodes, rec.gold.nodes, align_params)
            ged = ged_auto(
                rec.student, rec.gold, base.costs, rec.ontology,
                exact_limit=base.exact_limit, beam_width=base.beam_width,
            )
            components.append((ged.cost / normalizer_z(rec.student, rec.gold), 1.0 - foa, rec.label))
        for g1 in gammas:
            params = replace(base, gamma1=g1, gamma2=1.0 - g1, alignment=align_params)
            correct = 0
            for a_term, b_term, label in components:
                s = min(1.0, max(0.0, 1.0 - (g1 * a_term + (1.0 - g1) * b_term)))
                if band(s, params) == label:
                    correct += 1
            acc = correct / len(components)
            key = (-acc, abs(g1 - 0.5), g1, abs(alpha - 0.5), alpha)
            if best_key is None or key < best_key:
                best_key = key
                best_params = params
    return best_params

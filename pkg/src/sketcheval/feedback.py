"""Deficiency diagnosis, visual hints, feedback reports, revision loop.

The diagnosis compares a student graph to gold through the node alignment:
gold elements without a counterpart are missing, aligned nodes expressed
below the expected Bloom level are regressions, unaligned student elements
are extraneous. Hints come from the item's reverse mapping: one template per
gold concept and per gold relation triple, each with overlay drawing
primitives anchored in normalized canvas coordinates.
"""
from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Protocol

from .alignment import Alignment
from .errors import MissingTemplate, SchemaError
from .ontology import Ontology
from .scoring import Band, ScoringParams, SimilarityBreakdown, similarity
from .srg import BloomLevel, Srg, SrgEdge, SrgNode

if TYPE_CHECKING:
    from .items import ItemSpec

HINT_LIMIT_DEFAULT = 3
T_MAX_DEFAULT = 5
PERCEPTUAL_SIM_THRESHOLD = 0.7  # equal-ish semantics cutoff for mislabeled concepts


class DeficiencyKind(str, enum.Enum):
    MISSING_NODE = "missing_node"
    MISSING_EDGE = "missing_edge"
    BLOOM_REGRESSION = "bloom_regression"
    EXTRANEOUS_NODE = "extraneous_node"
    EXTRANEOUS_EDGE = "extraneous_edge"
    CONCEPT_MISMATCH = "concept_mismatch"


class Cause(str, enum.Enum):
    CONCEPTUAL = "conceptual"
    PERCEPTUAL = "perceptual"


_HINTABLE = (DeficiencyKind.MISSING_NODE, DeficiencyKind.BLOOM_REGRESSION, DeficiencyKind.MISSING_EDGE)
_KIND_RANK = {DeficiencyKind.MISSING_NODE: 0, DeficiencyKind.BLOOM_REGRESSION: 1, DeficiencyKind.MISSING_EDGE: 2}


@dataclass(frozen=True)
class Deficiency:
    kind: DeficiencyKind
    gold_node: SrgNode | None = None
    gold_edge: SrgEdge | None = None
    student_node: SrgNode | None = None
    student_edge: SrgEdge | None = None
    expected_bloom: BloomLevel | None = None
    cause: Cause = Cause.CONCEPTUAL
    # (source concept, relation, target concept) for gold-edge deficiencies;
    # doubles as the reverse-mapping key, set while the gold graph is in hand.
    edge_concepts: tuple[str, str, str] | None = None

    def __post_init__(self):
        k = self.kind
        if k in (DeficiencyKind.MISSING_NODE, DeficiencyKind.MISSING_EDGE):
            assert self.gold_node or self.gold_edge, "missing_* requires a gold reference"
        if k in (DeficiencyKind.EXTRANEOUS_NODE, DeficiencyKind.EXTRANEOUS_EDGE):
            assert self.student_node or self.student_edge, "extraneous_* requires a student reference"
        if k is DeficiencyKind.BLOOM_REGRESSION:
            assert self.gold_node and self.student_node, "bloom_regression requires both references"

    def key(self) -> str:
        if self.gold_edge is not None:
            return f"{self.kind.value}:{self.gold_edge.source}->{self.gold_edge.target}:{self.gold_edge.relation}"
        if self.gold_node is not None:
            return f"{self.kind.value}:{self.gold_node.id}"
        if self.student_edge is not None:
            return f"{self.kind.value}:{self.student_edge.source}->{self.student_edge.target}:{self.student_edge.relation}"
        return f"{self.kind.value}:{self.student_node.id}"

    def to_obj(self) -> dict:
        out: dict = {"kind": self.kind.value, "cause": self.cause.value}
        if self.gold_node:
            out["gold_node"] = {"id": self.gold_node.id, "concept": self.gold_node.concept}
        if self.gold_edge:
            out["gold_edge"] = list(self.gold_edge.key)
        if self.student_node:
            out["student_node"] = {"id": self.student_node.id, "concept": self.student_node.concept}
        if self.student_edge:
            out["student_edge"] = list(self.student_edge.key)
        if self.expected_bloom:
            out["expected_bloom"] = self.expected_bloom.label
        if self.edge_concepts:
            out["edge_concepts"] = list(self.edge_concepts)
        return out


@dataclass(frozen=True)
class OverlayPrimitive:
    kind: str  # marker | arrow | label
    region: tuple[float, float, float, float] | None = None
    anchor: str | None = None  # gold concept whose evidence region to use
    text: str | None = None

    def __post_init__(self):
        if self.kind not in ("marker", "arrow", "label"):
            raise SchemaError(f"unknown overlay primitive kind {self.kind!r}")


@dataclass(frozen=True)
class HintTemplate:
    key: str | tuple[str, str, str]  # concept, or (source concept, relation, target concept)
    hint_text: str
    overlay: tuple[OverlayPrimitive, ...] = ()


PhiMap = dict


@dataclass(frozen=True)
class VisualHint:
    deficiency: Deficiency
    text: str
    overlay_ops: tuple[OverlayPrimitive, ...]
    bloom_target: BloomLevel

    @property
    def hint_id(self) -> str:
        return self.deficiency.key()

    def to_obj(self) -> dict:
        return {
            "hint_id": self.hint_id,
            "text": self.text,
            "bloom_target": self.bloom_target.label,
            "deficiency": self.deficiency.to_obj(),
            "overlay": [
                {"kind": p.kind, "region": list(p.region) if p.region else None, "text": p.text}
                for p in self.overlay_ops
            ],
        }


def deficiencies(gs: Srg, go: Srg, a: Alignment, o: Ontology) -> list[Deficiency]:
    """Diagnose every gap between the student graph and gold.

    Gold-side gaps (missing elements, Bloom regressions) drive hints;
    student-side extras are reported as cautions. Aligned pairs whose
    concepts differ but sit close in the ontology are flagged as label
    mismatches, perceptual when the student supplied textual evidence.
    """
    s2g = a.student_to_gold()
    g2s = a.gold_to_student()
    gold_nodes = {n.id: n for n in go.nodes}
    student_nodes = {n.id: n for n in gs.nodes}
    out: list[Deficiency] = []

    for gn in sorted(go.nodes, key=lambda n: n.id):
        if gn.id not in g2s:
            out.append(Deficiency(DeficiencyKind.MISSING_NODE, gold_node=gn, expected_bloom=gn.bloom))

    s_rel = gs.edge_relations()
    for ge in sorted(go.edges, key=lambda e: e.key):
        u1, u2 = g2s.get(ge.source), g2s.get(ge.target)
        present = u1 is not None and u2 is not None and ge.relation in s_rel.get((u1, u2), ())
        if not present:
            expected = max(gold_nodes[ge.source].bloom, gold_nodes[ge.target].bloom)
            out.append(
                Deficiency(
                    DeficiencyKind.MISSING_EDGE,
                    gold_edge=ge,
                    expected_bloom=expected,
                    edge_concepts=(
                        gold_nodes[ge.source].concept,
                        ge.relation,
                        gold_nodes[ge.target].concept,
                    ),
                )
            )

    for sid in sorted(s2g):
        sn, gn = student_nodes[sid], gold_nodes[s2g[sid]]
        if sn.bloom < gn.bloom:
            out.append(
                Deficiency(
                    DeficiencyKind.BLOOM_REGRESSION,
                    gold_node=gn,
                    student_node=sn,
                    expected_bloom=gn.bloom,
                )
            )
        if sn.concept != gn.concept and o.sim_or_zero(sn.concept, gn.concept) >= PERCEPTUAL_SIM_THRESHOLD:
            cause = Cause.PERCEPTUAL if sn.evidence.text else Cause.CONCEPTUAL
            out.append(
                Deficiency(
                    DeficiencyKind.CONCEPT_MISMATCH,
                    gold_node=gn,
                    student_node=sn,
                    expected_bloom=gn.bloom,
                    cause=cause,
                )
            )

    for sn in sorted(gs.nodes, key=lambda n: n.id):
        if sn.id not in s2g:
            out.append(Deficiency(DeficiencyKind.EXTRANEOUS_NODE, student_node=sn))

    o_rel = go.edge_relations()
    for se in sorted(gs.edges, key=lambda e: e.key):
        v1, v2 = s2g.get(se.source), s2g.get(se.target)
        accounted = v1 is not None and v2 is not None and se.relation in o_rel.get((v1, v2), ())
        if not accounted:
            out.append(Deficiency(DeficiencyKind.EXTRANEOUS_EDGE, student_edge=se))

    return out


def phi_key_for(d: Deficiency):
    """Reverse-mapping key: gold concept for nodes, concept triple for edges."""
    if d.kind in (DeficiencyKind.MISSING_NODE, DeficiencyKind.BLOOM_REGRESSION):
        return d.gold_node.concept
    return d.edge_concepts


def hints(defs: list[Deficiency], phi: PhiMap, limit: int = HINT_LIMIT_DEFAULT) -> list[VisualHint]:
    """Visual hints for gold-side gaps, easiest cognitive work first.

    Ordered by ascending expected Bloom, with node hints ahead of edge hints
    at the same level so an edge's endpoints are always hinted no later than
    the edge itself; capped at ``limit``. Extraneous elements append
    text-only cautions after the cap.
    """
    hintable = [d for d in defs if d.kind in _HINTABLE]
    hintable.sort(key=lambda d: (d.expected_bloom.value, _KIND_RANK[d.kind], d.key()))
    out: list[VisualHint] = []
    for d in hintable[: max(limit, 0)]:
        key = phi_key_for(d)
        template = phi.get(key)
        if template is None:
            raise MissingTemplate(f"no hint template for {key!r}")
        out.append(
            VisualHint(
                deficiency=d,
                text=template.hint_text,
                overlay_ops=template.overlay,
                bloom_target=d.expected_bloom,
            )
        )
    for d in defs:
        if d.kind is DeficiencyKind.EXTRANEOUS_NODE:
            out.append(
                VisualHint(
                    deficiency=d,
                    text=(
                        f"Your sketch includes '{d.student_node.concept}', which this item does not "
                        "ask for. Check whether it belongs."
                    ),
                    overlay_ops=(),
                    bloom_target=d.student_node.bloom,
                )
            )
        elif d.kind is DeficiencyKind.EXTRANEOUS_EDGE:
            e = d.student_edge
            out.append(
                VisualHint(
                    deficiency=d,
                    text=(
                        f"The link '{e.source} -{e.relation}-> {e.target}' does not match the "
                        "expected relations. Reconsider it."
                    ),
                    overlay_ops=(),
                    bloom_target=BloomLevel.REMEMBER,
                )
            )
    return out


@dataclass(frozen=True)
class OverlayOp:
    op: str  # rect | arrow | label
    x0: float
    y0: float
    x1: float
    y1: float
    text: str | None
    hint_id: str

    def to_obj(self) -> dict:
        return {
            "op": self.op,
            "x0": self.x0,
            "y0": self.y0,
            "x1": self.x1,
            "y1": self.y1,
            "text": self.text,
            "hint_id": self.hint_id,
        }


_PRIMITIVE_OPS = {"marker": "rect", "arrow": "arrow", "label": "label"}
_FULL_CANVAS = (0.0, 0.0, 1.0, 1.0)


def render_overlay(hs: list[VisualHint], canvas_size: tuple[int, int]) -> list[OverlayOp]:
    """Scale normalized overlay primitives to absolute pixel instructions."""
    w, h = canvas_size
    if w <= 0 or h <= 0:
        raise ValueError("canvas size must be positive")
    ops: list[OverlayOp] = []
    for hint in hs:
        for prim in hint.overlay_ops:
            region = prim.region if prim.region is not None else _FULL_CANVAS
            x0, y0, x1, y1 = region
            ops.append(
                OverlayOp(
                    op=_PRIMITIVE_OPS[prim.kind],
                    x0=x0 * w,
                    y0=y0 * h,
                    x1=x1 * w,
                    y1=y1 * h,
                    text=prim.text if prim.text is not None else hint.text,
                    hint_id=hint.hint_id,
                )
            )
    return ops


def overlay_script_json(ops: list[OverlayOp], indent: int | None = 2) -> str:
    return json.dumps([op.to_obj() for op in ops], indent=indent)


@dataclass(frozen=True)
class FeedbackReport:
    similarity_score: float
    band: Band
    strengths: tuple[str, ...]
    attention: tuple[str, ...]  # missing gold concepts
    guidance: tuple[VisualHint, ...]
    gaps: tuple[Deficiency, ...]

    def to_obj(self) -> dict:
        return {
            "similarity_score": self.similarity_score,
            "proficiency_level": self.band.value,
            "strengths": list(self.strengths),
            "what_needs_attention": {"missing_concepts": list(self.attention)},
            "revision_guidance": [h.to_obj() for h in self.guidance],
            "reasoning_gaps": [d.to_obj() for d in self.gaps],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_obj(), indent=indent)

    def to_text(self) -> str:
        lines = [
            f"Similarity score: {self.similarity_score:.3f}",
            f"Proficiency level: {self.band.value}",
            "",
            "Strengths:",
        ]
        if self.strengths:
            lines += [f"  - {s}" for s in self.strengths]
        else:
            lines.append("  (none identified)")
        lines.append("")
        lines.append("What needs attention:")
        if self.attention:
            lines.append("  Missing concepts: " + ", ".join(self.attention))
        else:
            lines.append("  (nothing missing)")
        lines.append("")
        lines.append("Revision guidance:")
        if self.guidance:
            for hint in self.guidance:
                lines.append(f"  - {hint.deficiency.kind.value} [{hint.bloom_target.label}]: {hint.text}")
        else:
            lines.append("  (no revisions suggested)")
        lines.append("")
        lines.append("Reasoning gaps detected in:")
        if self.gaps:
            for d in self.gaps:
                lines.append(f"  - {d.key()} ({d.cause.value})")
        else:
            lines.append("  (none)")
        return "\n".join(lines)


def feedback_report(
    b: SimilarityBreakdown,
    defs: list[Deficiency],
    hs: list[VisualHint],
    gs: Srg | None = None,
    go: Srg | None = None,
) -> FeedbackReport:
    """Structured report; the JSON form is canonical, text is derived."""
    strengths = []
    gold_concepts = {n.id: n.concept for n in go.nodes} if go is not None else {}
    for pair in sorted(b.alignment.pairs, key=lambda p: (-p.weight, p.gold_id)):
        if pair.weight >= 0.9:
            label = gold_concepts.get(pair.gold_id, pair.gold_id)
            strengths.append(f"{label} is represented well (match weight {pair.weight:.2f})")
    attention = [d.gold_node.concept for d in defs if d.kind is DeficiencyKind.MISSING_NODE]
    return FeedbackReport(
        similarity_score=b.s,
        band=b.band,
        strengths=tuple(strengths),
        attention=tuple(attention),
        guidance=tuple(hs),
        gaps=tuple(defs),
    )


class StudentModel(Protocol):
    def revise(self, gs: Srg, hs: list[VisualHint]) -> Srg: ...


class LoopTermination(str, enum.Enum):
    THRESHOLD_MET = "threshold_met"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class LoopIteration:
    t: int
    graph: Srg
    breakdown: SimilarityBreakdown
    hints_issued: tuple[VisualHint, ...]


@dataclass(frozen=True)
class LoopTrace:
    iterations: tuple[LoopIteration, ...]
    terminated_by: LoopTermination
    t_max: int

    def to_obj(self) -> dict:
        from .srg import srg_to_obj

        return {
            "t_max": self.t_max,
            "terminated_by": self.terminated_by.value,
            "iterations": [
                {
                    "t": it.t,
                    "graph": srg_to_obj(it.graph),
                    "breakdown": it.breakdown.to_obj(),
                    "hints": [h.to_obj() for h in it.hints_issued],
                }
                for it in self.iterations
            ],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_obj(), indent=indent)


def loop_run(
    go: Srg,
    gs0: Srg,
    student: StudentModel,
    item: "ItemSpec",
    t_max: int = T_MAX_DEFAULT,
    hint_limit: int = HINT_LIMIT_DEFAULT,
) -> LoopTrace:
    """Score -> diagnose -> hint -> revise until the threshold or t_max."""
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    gs = gs0
    iterations: list[LoopIteration] = []
    terminated = LoopTermination.MAX_ITERATIONS
    for t in range(t_max + 1):
        b = similarity(gs, go, item.ontology, item.scoring)
        if b.s >= item.scoring.tau:
            iterations.append(LoopIteration(t, gs, b, ()))
            terminated = LoopTermination.THRESHOLD_MET
            break
        defs = deficiencies(gs, go, b.alignment, item.ontology)
        hs = hints(defs, item.phi, limit=hint_limit)
        iterations.append(LoopIteration(t, gs, b, tuple(hs)))
        if t == t_max:
            break
        gs = student.revise(gs, hs)
    return LoopTrace(iterations=tuple(iterations), terminated_by=terminated, t_max=t_max)


def simulated_student(gs: Srg, hs: list[VisualHint], go: Srg, p: float, seed: int) -> Srg:
    """Apply each hinted repair independently with probability p.

    Repairs insert the missing gold node or edge with gold attributes, or
    raise a regressed Bloom level to the gold level. Nothing absent from the
    gold graph is ever introduced. Deterministic for a fixed seed.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0,1]")
    rng = random.Random(seed)
    nodes = {n.id: n for n in gs.nodes}
    edges = {e.key: e for e in gs.edges}
    gold_nodes = {n.id: n for n in go.nodes}
    changed = False

    def find_student(gold_id: str) -> str | None:
        if gold_id in nodes:
            return gold_id
        concept = gold_nodes[gold_id].concept
        for nid in sorted(nodes):
            if nodes[nid].concept == concept:
                return nid
        return None

    for hint in hs:
        d = hint.deficiency
        if d.kind not in _HINTABLE:
            continue
        if rng.random() >= p:  # p=0 never fires, p=1 always does
            continue
        if d.kind is DeficiencyKind.MISSING_NODE:
            gn = d.gold_node
            if gn.id not in nodes:
                nodes[gn.id] = gn
                changed = True
        elif d.kind is DeficiencyKind.BLOOM_REGRESSION:
            sid = d.student_node.id
            if sid in nodes and nodes[sid].bloom < d.expected_bloom:
                nodes[sid] = replace(nodes[sid], bloom=d.expected_bloom)
                changed = True
        elif d.kind is DeficiencyKind.MISSING_EDGE:
            ge = d.gold_edge
            u1, u2 = find_student(ge.source), find_student(ge.target)
            if u1 and u2 and u1 != u2 and (u1, u2, ge.relation) not in edges:
                edges[(u1, u2, ge.relation)] = SrgEdge(u1, u2, ge.relation, ge.evidence)
                changed = True

    if not changed:
        return gs
    return Srg(
        nodes=tuple(sorted(nodes.values(), key=lambda n: n.id)),
        edges=tuple(sorted(edges.values(), key=lambda e: e.key)),
        role=gs.role,
        item_id=gs.item_id,
    )


class SimulatedStudent:
    """Deterministic reviser used by loop_run in tests and the CLI."""

    def __init__(self, go: Srg, p: float = 1.0, seed: int = 0):
        self.go = go
        self.p = p
        self.seed = seed
        self._calls = 0

    def revise(self, gs: Srg, hs: list[VisualHint]) -> Srg:
        derived = self.seed + 7919 * self._calls
        self._calls += 1
        return simulated_student(gs, hs, self.go, self.p, derived)


class NullStudent:
    """Applies nothing; useful for exercising the t_max path."""

    def revise(self, gs: Srg, hs: list[VisualHint]) -> Srg:
        return gs

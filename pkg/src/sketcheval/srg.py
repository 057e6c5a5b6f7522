"""Sketch reasoning graph data model and SRG-JSON serialization.

An SRG is a directed labeled graph: nodes carry a domain concept, a Bloom
cognitive level, and free-form evidence; edges carry a relation label.
Graphs are immutable values once constructed and validate their structural
invariants in ``__post_init__``, so no invalid graph can circulate.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

from .errors import IntegrityError, SchemaError

SRG_VERSION = "1"

BLOOM_ORDINAL_MAX = 6


class BloomLevel(enum.IntEnum):
    """Six-level cognitive hierarchy, ordered Remember(1) .. Create(6)."""

    REMEMBER = 1
    UNDERSTAND = 2
    APPLY = 3
    ANALYZE = 4
    EVALUATE = 5
    CREATE = 6

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def from_name(cls, name: str) -> "BloomLevel":
        if not isinstance(name, str):
            raise ValueError(f"Bloom level must be a string, got {type(name).__name__}")
        try:
            return cls[name.upper()]
        except KeyError:
            raise ValueError(f"unknown Bloom level {name!r}") from None


class Role(str, enum.Enum):
    GOLD = "gold"
    STUDENT = "student"


@dataclass(frozen=True)
class Evidence:
    """Visual/textual support for a node or edge annotation."""

    text: str = ""
    region: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.region is not None:
            if len(self.region) != 4:
                raise ValueError("evidence region must be [x0, y0, x1, y1]")
            x0, y0, x1, y1 = self.region
            if not (0 <= x0 <= x1 <= 1 and 0 <= y0 <= y1 <= 1):
                raise ValueError(f"evidence region out of order or outside [0,1]^2: {self.region}")
            object.__setattr__(self, "region", (float(x0), float(y0), float(x1), float(y1)))


@dataclass(frozen=True)
class SrgNode:
    id: str
    concept: str
    bloom: BloomLevel
    evidence: Evidence = field(default_factory=Evidence)

    def __post_init__(self):
        if not self.id:
            raise IntegrityError("node id must be nonempty")
        if not self.concept:
            raise IntegrityError(f"node {self.id!r} has an empty concept")


@dataclass(frozen=True)
class SrgEdge:
    source: str
    target: str
    relation: str
    evidence: Evidence = field(default_factory=Evidence)

    def __post_init__(self):
        if self.source == self.target:
            raise IntegrityError(f"self-loop on node {self.source!r}")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.source, self.target, self.relation)


@dataclass(frozen=True)
class Srg:
    """A validated sketch reasoning graph. May be disconnected or empty."""

    nodes: tuple[SrgNode, ...]
    edges: tuple[SrgEdge, ...]
    role: Role
    item_id: str

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [n.id for n in self.nodes]
        id_set = set(ids)
        if len(ids) != len(id_set):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise IntegrityError(f"duplicate node ids: {dupes}")
        seen_edges: set[tuple[str, str, str]] = set()
        for e in self.edges:
            if e.source not in id_set:
                raise IntegrityError(f"edge references unknown node {e.source!r}")
            if e.target not in id_set:
                raise IntegrityError(f"edge references unknown node {e.target!r}")
            if e.key in seen_edges:
                raise IntegrityError(f"duplicate edge {e.key}")
            seen_edges.add(e.key)

    def node(self, node_id: str) -> SrgNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    def edge_relations(self) -> dict[tuple[str, str], set[str]]:
        """Relation labels grouped by ordered endpoint pair."""
        groups: dict[tuple[str, str], set[str]] = {}
        for e in self.edges:
            groups.setdefault((e.source, e.target), set()).add(e.relation)
        return groups


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # "unresolved_concept" | "unknown_relation"
    ref: str  # node id or edge key string
    value: str  # the offending concept or relation label


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...]

    @property
    def ok(self) -> bool:
        return not self.issues


def _evidence_to_json(ev: Evidence) -> dict:
    return {"text": ev.text, "region": list(ev.region) if ev.region is not None else None}


def _evidence_from_json(obj, where: str) -> Evidence:
    if obj is None:
        return Evidence()
    if not isinstance(obj, dict):
        raise SchemaError(f"{where}: evidence must be an object")
    text = obj.get("text", "")
    if not isinstance(text, str):
        raise SchemaError(f"{where}: evidence text must be a string")
    region = obj.get("region")
    if region is not None:
        if not isinstance(region, (list, tuple)) or len(region) != 4 or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in region
        ):
            raise SchemaError(f"{where}: evidence region must be a list of 4 numbers")
        try:
            return Evidence(text=text, region=tuple(float(v) for v in region))
        except ValueError as exc:
            raise SchemaError(f"{where}: {exc}") from None
    return Evidence(text=text)


def parse_srg(document: str) -> Srg:
    """Parse an SRG-JSON document into a validated Srg.

    Raises SchemaError on malformed documents, IntegrityError on structural
    violations, and ValueError on unknown Bloom names.
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return srg_from_obj(data)


def srg_from_obj(data) -> Srg:
    """Build an Srg from an already-decoded SRG-JSON object."""
    if not isinstance(data, dict):
        raise SchemaError("top-level value must be an object")
    if data.get("srg_version") != SRG_VERSION:
        raise SchemaError(f"unsupported srg_version {data.get('srg_version')!r}")
    item_id = data.get("item_id")
    if not isinstance(item_id, str):
        raise SchemaError("item_id must be a string")
    role_raw = data.get("role")
    try:
        role = Role(role_raw)
    except ValueError:
        raise SchemaError(f"role must be 'gold' or 'student', got {role_raw!r}") from None
    nodes_raw = data.get("nodes")
    edges_raw = data.get("edges")
    if not isinstance(nodes_raw, list) or not isinstance(edges_raw, list):
        raise SchemaError("nodes and edges must be arrays")

    nodes = []
    for i, n in enumerate(nodes_raw):
        where = f"nodes[{i}]"
        if not isinstance(n, dict):
            raise SchemaError(f"{where}: must be an object")
        nid, concept, bloom = n.get("id"), n.get("concept"), n.get("bloom")
        if not isinstance(nid, str) or not nid:
            raise SchemaError(f"{where}: id must be a nonempty string")
        if not isinstance(concept, str) or not concept:
            raise SchemaError(f"{where}: concept must be a nonempty string")
        if not isinstance(bloom, str):
            raise SchemaError(f"{where}: bloom must be a string")
        nodes.append(
            SrgNode(
                id=nid,
                concept=concept,
                bloom=BloomLevel.from_name(bloom),
                evidence=_evidence_from_json(n.get("evidence"), where),
            )
        )

    edges = []
    for i, e in enumerate(edges_raw):
        where = f"edges[{i}]"
        if not isinstance(e, dict):
            raise SchemaError(f"{where}: must be an object")
        src, tgt, rel = e.get("source"), e.get("target"), e.get("relation")
        if not isinstance(src, str) or not isinstance(tgt, str) or not isinstance(rel, str):
            raise SchemaError(f"{where}: source, target and relation must be strings")
        edges.append(
            SrgEdge(
                source=src,
                target=tgt,
                relation=rel,
                evidence=_evidence_from_json(e.get("evidence"), where),
            )
        )

    return Srg(nodes=tuple(nodes), edges=tuple(edges), role=role, item_id=item_id)


def srg_to_obj(g: Srg) -> dict:
    return {
        "srg_version": SRG_VERSION,
        "item_id": g.item_id,
        "role": g.role.value,
        "nodes": [
            {
                "id": n.id,
                "concept": n.concept,
                "bloom": n.bloom.label,
                "evidence": _evidence_to_json(n.evidence),
            }
            for n in g.nodes
        ],
        "edges": [
            {
                "source": e.source,
                "target": e.target,
                "relation": e.relation,
                "evidence": _evidence_to_json(e.evidence),
            }
            for e in g.edges
        ],
    }


def serialize_srg(g: Srg, indent: int | None = 2) -> str:
    """Serialize to SRG-JSON. parse_srg(serialize_srg(g)) == g."""
    return json.dumps(srg_to_obj(g), indent=indent)


def validate_against_ontology(g: Srg, ontology) -> ValidationReport:
    """Report nodes/edges whose concept or relation is not in the ontology.

    Never raises: unresolved vocabulary is reported, not rejected, so noisy
    perception output can still be scored under the sim=0 policy.
    """
    issues = []
    for n in g.nodes:
        if n.concept not in ontology.concepts:
            issues.append(ValidationIssue("unresolved_concept", n.id, n.concept))
    for e in g.edges:
        if e.relation not in ontology.relations:
            issues.append(ValidationIssue("unknown_relation", f"{e.source}->{e.target}", e.relation))
    return ValidationReport(issues=tuple(issues))

"""Per-item concept hierarchy and Wu-Palmer taxonomy similarity.

Each assessment item carries its own rooted concept tree plus the relation
vocabulary its rubric uses. Depths and root paths are precomputed at load so
lookups are contention-free reads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import CycleError, MultipleRootsError, SchemaError, UnknownConcept


@dataclass(frozen=True)
class Ontology:
    root: str
    parent: dict[str, str]  # child -> parent; root absent
    relations: frozenset[str]
    depth: dict[str, int] = field(default_factory=dict, compare=False)
    _ancestors: dict[str, tuple[str, ...]] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        depth: dict[str, int] = {}
        ancestors: dict[str, tuple[str, ...]] = {}
        for concept in self.concepts:
            chain = [concept]
            seen = {concept}
            cur = concept
            while cur != self.root:
                cur = self.parent.get(cur)
                if cur is None:
                    raise SchemaError(f"concept {chain[-1]!r} has no path to root")
                if cur in seen:
                    raise CycleError(f"cycle through concept {cur!r}")
                seen.add(cur)
                chain.append(cur)
            depth[concept] = len(chain) - 1
            ancestors[concept] = tuple(chain)  # concept itself first, root last
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "_ancestors", ancestors)

    @property
    def concepts(self) -> frozenset[str]:
        return frozenset(self.parent) | {self.root}

    def require(self, concept: str):
        if concept not in self.concepts:
            raise UnknownConcept(f"unknown concept {concept!r}")

    def lca(self, a: str, b: str) -> str:
        """Deepest common ancestor of a and b."""
        self.require(a)
        self.require(b)
        bs = set(self._ancestors[b])
        for c in self._ancestors[a]:  # walks up from a, so first hit is deepest
            if c in bs:
                return c
        return self.root

    def sim(self, a: str, b: str) -> float:
        """Wu-Palmer similarity 2*depth(lca)/(depth(a)+depth(b)), in [0,1].

        sim(x, x) = 1 by convention (covers the root/root 0/0 case).
        """
        self.require(a)
        self.require(b)
        if a == b:
            return 1.0
        dl = self.depth[self.lca(a, b)]
        return 2.0 * dl / (self.depth[a] + self.depth[b])

    def sim_or_zero(self, a: str, b: str) -> float:
        """Scoring-time policy: unknown concepts score 0 against everything."""
        if a not in self.concepts or b not in self.concepts:
            return 0.0
        return self.sim(a, b)


def lca(o: Ontology, a: str, b: str) -> str:
    return o.lca(a, b)


def sim_o(o: Ontology, a: str, b: str) -> float:
    return o.sim(a, b)


def ontology_from_obj(data) -> Ontology:
    if not isinstance(data, dict):
        raise SchemaError("ontology document must be an object")
    root = data.get("root")
    if not isinstance(root, str) or not root:
        raise SchemaError("ontology root must be a nonempty string")
    concepts_raw = data.get("concepts")
    if not isinstance(concepts_raw, list):
        raise SchemaError("ontology concepts must be an array")
    relations_raw = data.get("relations", [])
    if not isinstance(relations_raw, list) or not all(isinstance(r, str) for r in relations_raw):
        raise SchemaError("ontology relations must be an array of strings")

    parent: dict[str, str] = {}
    roots = []
    ids = set()
    for i, c in enumerate(concepts_raw):
        if not isinstance(c, dict) or not isinstance(c.get("id"), str) or not c["id"]:
            raise SchemaError(f"concepts[{i}]: must be an object with a nonempty string id")
        cid = c["id"]
        if cid in ids:
            raise SchemaError(f"duplicate concept id {cid!r}")
        ids.add(cid)
        p = c.get("parent")
        if p is None:
            roots.append(cid)
        elif isinstance(p, str):
            parent[cid] = p
        else:
            raise SchemaError(f"concepts[{i}]: parent must be a string or null")

    for child, p in parent.items():
        if p not in ids:
            raise SchemaError(f"concept {child!r} has unknown parent {p!r}")
    # Cycle walk before the root-count check: a cyclic document usually has
    # no parentless concept at all, and CycleError is the useful diagnosis.
    for start in parent:
        seen = {start}
        cur = parent.get(start)
        while cur is not None:
            if cur in seen:
                raise CycleError(f"cycle through concept {cur!r}")
            seen.add(cur)
            cur = parent.get(cur)
    if len(roots) != 1:
        raise MultipleRootsError(f"expected exactly one root concept, found {len(roots)}")
    if roots[0] != root:
        raise SchemaError(f"declared root {root!r} but parentless concept is {roots[0]!r}")

    return Ontology(root=root, parent=parent, relations=frozenset(relations_raw))


def load_ontology(document: str) -> Ontology:
    """Parse an ontology-JSON document into a validated rooted tree."""
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from None
    return ontology_from_obj(data)


def ontology_to_obj(o: Ontology) -> dict:
    concepts = [{"id": o.root, "parent": None}]
    concepts += [{"id": c, "parent": p} for c, p in sorted(o.parent.items())]
    return {"root": o.root, "concepts": concepts, "relations": sorted(o.relations)}


def serialize_ontology(o: Ontology, indent: int | None = 2) -> str:
    return json.dumps(ontology_to_obj(o), indent=indent)

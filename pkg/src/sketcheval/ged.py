"""Bloom-aware graph edit distance between student and gold graphs.

The distance is the cheapest way to turn the student graph into the gold
graph under an explicit cost model: node insert/delete, node substitution
(ontology dissimilarity plus an asymmetric penalty when the student's Bloom
level sits below the gold level), and edge insert/delete/substitution keyed
on relation labels.

Costs are intentionally directional: only student-below-gold Bloom
regressions are penalized, so ged(gs, go) != ged(go, gs) in general.

Solvers: ``ged_exact`` runs A* over student-node assignment prefixes with an
admissible Hungarian lower bound; ``ged_beam`` is a deterministic
level-synchronous beam over the same tree, giving an upper bound at any
width.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import IntegrityError, SizeLimitExceeded
from .ontology import Ontology
from .srg import BLOOM_ORDINAL_MAX, BloomLevel, Srg, SrgEdge, SrgNode

EXACT_LIMIT_DEFAULT = 12  # combined |Vs| + |Vo|
_BIG = 1e15


@dataclass(frozen=True)
class EditCostModel:
    node_insert: float = 1.0
    node_delete: float = 1.0
    edge_insert: float = 1.0
    edge_delete: float = 1.0
    relation_mismatch: float = 1.0
    beta: float = 0.5  # Bloom-regression penalty weight

    def __post_init__(self):
        for name in ("node_insert", "node_delete", "edge_insert", "edge_delete", "relation_mismatch", "beta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    def node_sub(self, vs: SrgNode, vo: SrgNode, o: Ontology) -> float:
        sim = o.sim_or_zero(vs.concept, vo.concept)
        regression = max(0, vo.bloom.value - vs.bloom.value)
        return (1.0 - sim) + self.beta * regression / (BLOOM_ORDINAL_MAX - 1)

    def edge_sub_each(self) -> float:
        # A mismatched relation is either substituted or replaced outright,
        # whichever the model prices lower.
        return min(self.relation_mismatch, self.edge_delete + self.edge_insert)

    def group_cost(self, rels_s: set[str], rels_o: set[str]) -> float:
        """Cheapest edit of the edges between one mapped node pair.

        Exact-relation matches are free; leftovers pair up as substitutions
        and the excess is deleted/inserted.
        """
        matched = len(rels_s & rels_o)
        rs, ro = len(rels_s) - matched, len(rels_o) - matched
        paired = min(rs, ro)
        return (
            paired * self.edge_sub_each()
            + (rs - paired) * self.edge_delete
            + (ro - paired) * self.edge_insert
        )


@dataclass(frozen=True)
class EditOp:
    op: str  # delete_edge | delete_node | substitute_node | substitute_edge | insert_node | insert_edge
    cost: float
    node_id: str | None = None
    gold_id: str | None = None
    source: str | None = None
    target: str | None = None
    relation: str | None = None
    new_relation: str | None = None
    concept: str | None = None
    bloom: str | None = None

    def to_obj(self) -> dict:
        out = {"op": self.op, "cost": self.cost}
        for k in ("node_id", "gold_id", "source", "target", "relation", "new_relation", "concept", "bloom"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        return out


@dataclass(frozen=True)
class GedResult:
    cost: float
    script: tuple[EditOp, ...]
    exact: bool
    mapping: tuple[tuple[str, str | None], ...] = field(default=())  # student id -> gold id (None = deleted)

    def to_obj(self) -> dict:
        return {
            "cost": self.cost,
            "exact": self.exact,
            "mapping": [[s, g] for s, g in self.mapping],
            "script": [op.to_obj() for op in self.script],
        }

    def script_json(self) -> str:
        return json.dumps([op.to_obj() for op in self.script], indent=2)


def normalizer_z(gs: Srg, go: Srg) -> int:
    """Total node and edge count of both graphs; 1 when both are empty."""
    z = len(gs.nodes) + len(go.nodes) + len(gs.edges) + len(go.edges)
    return z if z > 0 else 1


class _Problem:
    """Shared search context for both solvers."""

    def __init__(self, gs: Srg, go: Srg, costs: EditCostModel, o: Ontology):
        self.costs = costs
        # High-degree student nodes first: resolves more edges early, which
        # tightens g and prunes harder. Id tiebreak keeps runs reproducible.
        degree: dict[str, int] = {n.id: 0 for n in gs.nodes}
        for e in gs.edges:
            degree[e.source] += 1
            degree[e.target] += 1
        self.s_nodes = sorted(gs.nodes, key=lambda n: (-degree[n.id], n.id))
        self.o_nodes = sorted(go.nodes, key=lambda n: n.id)
        self.s_index = {n.id: i for i, n in enumerate(self.s_nodes)}
        self.o_index = {n.id: j for j, n in enumerate(self.o_nodes)}
        self.ns, self.no = len(self.s_nodes), len(self.o_nodes)
        self.s_rel = gs.edge_relations()
        self.o_rel = go.edge_relations()
        self.gs, self.go = gs, go
        self.sub = np.zeros((self.ns, self.no))
        for i, u in enumerate(self.s_nodes):
            for j, v in enumerate(self.o_nodes):
                self.sub[i, j] = costs.node_sub(u, v, o)

    def step_cost(self, assigned: tuple[int, ...], k: int, j: int) -> float:
        """Cost newly committed by deciding student k -> gold j (-1 deletes).

        Node cost plus every edge whose fate this decision settles: all edges
        incident to a deleted node, and the full relation-group edit between
        (u_i, u_k) and their images once both endpoints are mapped.
        """
        c = self.costs
        u = self.s_nodes[k]
        if j < 0:
            cost = c.node_delete
            for i in range(self.ns):
                if i == k or (i < k and assigned[i] < 0):
                    continue  # self-loops impossible; edges to earlier-deleted already counted
                a, b = u.id, self.s_nodes[i].id
                cost += len(self.s_rel.get((a, b), ())) * c.edge_delete
                cost += len(self.s_rel.get((b, a), ())) * c.edge_delete
            return cost
        v = self.o_nodes[j]
        cost = self.sub[k, j]
        for i in range(k):
            ji = assigned[i]
            if ji < 0:
                continue  # edges to deleted neighbors were priced at deletion time
            w = self.s_nodes[i]
            x = self.o_nodes[ji]
            cost += c.group_cost(
                self.s_rel.get((u.id, w.id), set()), self.o_rel.get((v.id, x.id), set())
            )
            cost += c.group_cost(
                self.s_rel.get((w.id, u.id), set()), self.o_rel.get((x.id, v.id), set())
            )
        return cost

    def goal_cost(self, assigned: tuple[int, ...]) -> float:
        """Insertions for gold nodes never matched, and their incident edges."""
        c = self.costs
        used = {j for j in assigned if j >= 0}
        unmatched = [v.id for j, v in enumerate(self.o_nodes) if j not in used]
        cost = len(unmatched) * c.node_insert
        pend = set(unmatched)
        for e in self.go.edges:
            if e.source in pend or e.target in pend:
                cost += c.edge_insert
        return cost

    def heuristic(self, assigned: tuple[int, ...], k: int) -> float:
        """Admissible bound: optimal node-only assignment of the undecided rest."""
        rows = list(range(k, self.ns))
        cols = [j for j in range(self.no) if j not in set(assigned[:k])]
        n, m = len(rows), len(cols)
        if n == 0 and m == 0:
            return 0.0
        c = self.costs
        mat = np.full((n + m, m + n), _BIG)
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                mat[a, b] = self.sub[i, j]
            mat[a, m + a] = c.node_delete
        for b in range(m):
            mat[n + b, b] = c.node_insert
        mat[n:, m:] = 0.0
        r, cc = linear_sum_assignment(mat)
        return float(mat[r, cc].sum())

    def full_cost(self, assigned: tuple[int, ...]) -> float:
        g = 0.0
        for k, j in enumerate(assigned):
            g += self.step_cost(assigned[:k], k, j)
        return g + self.goal_cost(assigned)


def _search_exact(problem: _Problem) -> tuple[float, tuple[int, ...]]:
    start: tuple[int, ...] = ()
    h0 = problem.heuristic(start, 0)
    counter = 0
    # Fixed variable order makes the space a tree: no closed set needed.
    heap: list[tuple[float, int, tuple[int, ...], float]] = [(h0, counter, start, 0.0)]
    best_cost, best_assigned = float("inf"), start
    while heap:
        f, _, assigned, g = heapq.heappop(heap)
        k = len(assigned)
        if f >= best_cost - 1e-12:
            # Admissible h: nothing cheaper remains.
            break
        if k == problem.ns:
            total = g + problem.goal_cost(assigned)
            if total < best_cost:
                best_cost, best_assigned = total, assigned
            continue
        used = set(assigned)
        choices = [-1] + [j for j in range(problem.no) if j not in used]
        for j in choices:
            child = assigned + (j,)
            g2 = g + problem.step_cost(assigned, k, j)
            h2 = problem.heuristic(child, k + 1)
            # The goal adds unmatched-gold edge insertions that h ignores;
            # fold them in at the last level so leaves order correctly.
            if k + 1 == problem.ns:
                g2 += problem.goal_cost(child)
                h2 = 0.0
                if g2 < best_cost:
                    best_cost, best_assigned = g2, child
                counter += 1
                continue
            counter += 1
            heapq.heappush(heap, (g2 + h2, counter, child, g2))
    return best_cost, best_assigned


def _search_beam(problem: _Problem, width: int) -> tuple[float, tuple[int, ...]]:
    level: list[tuple[float, tuple[int, ...], float]] = [(problem.heuristic((), 0), (), 0.0)]
    for k in range(problem.ns):
        children: list[tuple[float, tuple[int, ...], float]] = []
        for _, assigned, g in level:
            used = set(assigned)
            for j in [-1] + [jj for jj in range(problem.no) if jj not in used]:
                child = assigned + (j,)
                g2 = g + problem.step_cost(assigned, k, j)
                h2 = problem.heuristic(child, k + 1) if k + 1 < problem.ns else problem.goal_cost(child)
                children.append((g2 + h2, child, g2))
        children.sort(key=lambda t: (t[0], t[1]))
        level = children[:width]
    if not level:  # ns == 0: single empty assignment
        assigned: tuple[int, ...] = ()
        return problem.full_cost(assigned), assigned
    best = min(level, key=lambda t: (t[2] + problem.goal_cost(t[1]), t[1]))
    assigned = best[1]
    return best[2] + problem.goal_cost(assigned), assigned


def _build_script(problem: _Problem, assigned: tuple[int, ...]) -> tuple[EditOp, ...]:
    """Deterministic edit script for a node mapping.

    Order: edge deletions, node deletions, node substitutions, edge
    substitutions, node insertions, edge insertions. Zero-diff matches emit
    nothing, so identical graphs yield an empty script.
    """
    c = problem.costs
    ops: list[EditOp] = []
    mapping = {problem.s_nodes[k].id: (problem.o_nodes[j].id if j >= 0 else None) for k, j in enumerate(assigned)}
    gold_by_id = {n.id: n for n in problem.o_nodes}
    matched_gold = {g for g in mapping.values() if g is not None}
    image = {s: g for s, g in mapping.items() if g is not None}

    deleted_edges: list[SrgEdge] = []
    grouped_s: dict[tuple[str, str], set[str]] = {}
    for e in problem.gs.edges:
        if image.get(e.source) is None or image.get(e.target) is None:
            deleted_edges.append(e)
        else:
            grouped_s.setdefault((e.source, e.target), set()).add(e.relation)
    for e in sorted(deleted_edges, key=lambda e: e.key):
        ops.append(EditOp("delete_edge", c.edge_delete, source=e.source, target=e.target, relation=e.relation))

    for sid in sorted(s for s, g in mapping.items() if g is None):
        ops.append(EditOp("delete_node", c.node_delete, node_id=sid))

    student_by_id = {n.id: n for n in problem.s_nodes}
    for sid in sorted(image):
        gid = image[sid]
        u, v = student_by_id[sid], gold_by_id[gid]
        cost = problem.sub[problem.s_index[sid], problem.o_index[gid]]
        if sid != gid or u.concept != v.concept or u.bloom != v.bloom:
            ops.append(
                EditOp(
                    "substitute_node",
                    float(cost),
                    node_id=sid,
                    gold_id=gid,
                    concept=v.concept,
                    bloom=v.bloom.label,
                )
            )

    # Edge edits between mapped pairs: free exact matches, substitutions for
    # paired leftovers, deletes/inserts for the excess.
    pending_inserts: list[tuple[str, str, str]] = []
    seen_gold_groups: set[tuple[str, str]] = set()
    for (s1, s2), rels_s in sorted(grouped_s.items()):
        g1, g2 = image[s1], image[s2]
        rels_o = problem.o_rel.get((g1, g2), set())
        seen_gold_groups.add((g1, g2))
        extra_s = sorted(rels_s - rels_o)
        extra_o = sorted(rels_o - rels_s)
        sub_each = c.edge_sub_each()
        while extra_s and extra_o:
            rs, ro = extra_s.pop(0), extra_o.pop(0)
            if c.relation_mismatch <= c.edge_delete + c.edge_insert:
                ops.append(
                    EditOp("substitute_edge", sub_each, source=g1, target=g2, relation=rs, new_relation=ro)
                )
            else:
                ops.append(EditOp("delete_edge", c.edge_delete, source=s1, target=s2, relation=rs))
                pending_inserts.append((g1, g2, ro))
        for rs in extra_s:
            ops.append(EditOp("delete_edge", c.edge_delete, source=s1, target=s2, relation=rs))
        for ro in extra_o:
            pending_inserts.append((g1, g2, ro))

    for n in sorted((n for n in problem.o_nodes if n.id not in matched_gold), key=lambda n: n.id):
        ops.append(
            EditOp("insert_node", c.node_insert, node_id=n.id, concept=n.concept, bloom=n.bloom.label)
        )

    for e in problem.go.edges:
        both_matched = e.source in matched_gold and e.target in matched_gold
        if not both_matched:
            pending_inserts.append((e.source, e.target, e.relation))
        elif (e.source, e.target) not in seen_gold_groups:
            # Mapped endpoints but no student edges at all between them.
            pending_inserts.append((e.source, e.target, e.relation))
    for src, tgt, rel in sorted(pending_inserts):
        ops.append(EditOp("insert_edge", c.edge_insert, source=src, target=tgt, relation=rel))

    return tuple(ops)


def _result(problem: _Problem, cost: float, assigned: tuple[int, ...], exact: bool) -> GedResult:
    script = _build_script(problem, assigned)
    mapping = tuple(
        sorted(
            (problem.s_nodes[k].id, problem.o_nodes[j].id if j >= 0 else None)
            for k, j in enumerate(assigned)
        )
    )
    return GedResult(cost=float(cost), script=script, exact=exact, mapping=mapping)


def ged_exact(
    gs: Srg,
    go: Srg,
    costs: EditCostModel,
    o: Ontology,
    exact_limit: int = EXACT_LIMIT_DEFAULT,
) -> GedResult:
    """Minimal-cost edit script via A*; optimal under the cost model."""
    if len(gs.nodes) + len(go.nodes) > exact_limit:
        raise SizeLimitExceeded(
            f"combined node count {len(gs.nodes) + len(go.nodes)} exceeds exact limit {exact_limit}"
        )
    problem = _Problem(gs, go, costs, o)
    cost, assigned = _search_exact(problem)
    return _result(problem, cost, assigned, exact=True)


def ged_beam(gs: Srg, go: Srg, costs: EditCostModel, o: Ontology, beam_width: int = 32) -> GedResult:
    """Deterministic beam approximation; cost is an upper bound on the optimum."""
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    problem = _Problem(gs, go, costs, o)
    cost, assigned = _search_beam(problem, beam_width)
    return _result(problem, cost, assigned, exact=False)


def ged_auto(
    gs: Srg,
    go: Srg,
    costs: EditCostModel,
    o: Ontology,
    exact_limit: int = EXACT_LIMIT_DEFAULT,
    beam_width: int = 32,
) -> GedResult:
    """Exact when the combined size allows it, beam otherwise."""
    if len(gs.nodes) + len(go.nodes) <= exact_limit:
        return ged_exact(gs, go, costs, o, exact_limit=exact_limit)
    return ged_beam(gs, go, costs, o, beam_width=beam_width)


def apply_edit_script(gs: Srg, script: tuple[EditOp, ...]) -> Srg:
    """Replay a script; the result equals the gold graph on
    (id, concept, bloom) nodes and (source, target, relation) edges.

    Ops are applied in phases matching the builder's emission order:
    deletions address student ids, all node substitutions rename
    student -> gold ids simultaneously (a pairwise rename could collide when
    a gold id coincides with a still-present student id), then edge
    substitutions and insertions address gold ids.
    """
    nodes: dict[str, SrgNode] = {n.id: n for n in gs.nodes}
    edges: dict[tuple[str, str, str], SrgEdge] = {e.key: e for e in gs.edges}
    by_type: dict[str, list[EditOp]] = {}
    for op in script:
        if op.op not in (
            "delete_edge",
            "delete_node",
            "substitute_node",
            "substitute_edge",
            "insert_node",
            "insert_edge",
        ):
            raise IntegrityError(f"unknown edit op {op.op!r}")
        by_type.setdefault(op.op, []).append(op)

    for op in by_type.get("delete_edge", []):
        edges.pop((op.source, op.target, op.relation), None)
    for op in by_type.get("delete_node", []):
        nodes.pop(op.node_id)
        for key in [k for k in edges if op.node_id in (k[0], k[1])]:
            edges.pop(key)

    rename = {op.node_id: op.gold_id for op in by_type.get("substitute_node", [])}
    if rename:
        for op in by_type.get("substitute_node", []):
            old = nodes.pop(op.node_id)
            nodes[op.gold_id] = SrgNode(op.gold_id, op.concept, BloomLevel.from_name(op.bloom), old.evidence)
        renamed: dict[tuple[str, str, str], SrgEdge] = {}
        for e in edges.values():
            src = rename.get(e.source, e.source)
            tgt = rename.get(e.target, e.target)
            renamed[(src, tgt, e.relation)] = SrgEdge(src, tgt, e.relation, e.evidence)
        edges = renamed

    for op in by_type.get("substitute_edge", []):
        e = edges.pop((op.source, op.target, op.relation))
        edges[(e.source, e.target, op.new_relation)] = SrgEdge(e.source, e.target, op.new_relation, e.evidence)
    for op in by_type.get("insert_node", []):
        nodes[op.node_id] = SrgNode(op.node_id, op.concept, BloomLevel.from_name(op.bloom))
    for op in by_type.get("insert_edge", []):
        edges[(op.source, op.target, op.relation)] = SrgEdge(op.source, op.target, op.relation)

    return Srg(
        nodes=tuple(sorted(nodes.values(), key=lambda n: n.id)),
        edges=tuple(sorted(edges.values(), key=lambda e: e.key)),
        role=gs.role,
        item_id=gs.item_id,
    )

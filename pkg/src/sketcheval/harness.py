"""Batch evaluation, accuracy metric, report tables, synthetic pack generator.

Accuracy per item is the fraction of samples whose predicted proficiency
band equals the human label exactly (no adjacent credit); the headline
number is the arithmetic mean over items.

The synthetic generator plants band labels by construction and verifies
every sample with the generating parameters, so the metric pipeline can be
tested end to end without the (unreleased) real dataset.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .feedback import HintTemplate, OverlayPrimitive
from .items import ItemSpec, LabeledSample, save_item_dir
from .ontology import Ontology
from .scoring import Band, CalibrationRecord, ScoringParams, similarity
from .srg import BloomLevel, Evidence, Role, Srg, SrgEdge, SrgNode

log = logging.getLogger(__name__)

BAND_ORDER = (Band.BEGINNING, Band.DEVELOPING, Band.PROFICIENT)

DEFAULT_ITEM_IDS = ("R1-1", "J2-1", "M3-1", "H4-1", "H5-1", "J6-1")
_DEFAULT_HIGHEST = {
    "R1-1": BloomLevel.APPLY,
    "J2-1": BloomLevel.ANALYZE,
    "M3-1": BloomLevel.ANALYZE,
    "H4-1": BloomLevel.CREATE,
    "H5-1": BloomLevel.EVALUATE,
    "J6-1": BloomLevel.ANALYZE,
}
_RELATIONS = ("causes", "affects", "contains", "results_in", "precedes")


@dataclass(frozen=True)
class EvalResult:
    per_item: dict[str, float]  # item id -> accuracy in [0,1]
    macro_average: float
    confusion: dict[str, list[list[int]]]  # item id -> 3x3 [true][pred], band order B/D/P
    label: str = "sketcheval"

    def to_obj(self) -> dict:
        return {
            "label": self.label,
            "per_item": dict(self.per_item),
            "macro_average": self.macro_average,
            "confusion": {k: [list(r) for r in v] for k, v in self.confusion.items()},
            "band_order": [b.value for b in BAND_ORDER],
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_obj(), indent=indent)


def evaluate(
    items: list[ItemSpec],
    samples: dict[str, list[LabeledSample]],
    parallelism: int = 1,
    label: str = "sketcheval",
) -> EvalResult:
    """Score every sample and tally per-item and macro accuracy.

    Deterministic for any worker count: results reduce in sorted sample-id
    order. A sample whose scoring raises counts as incorrect and is logged.
    """
    items = sorted(items, key=lambda i: i.item_id)
    per_item: dict[str, float] = {}
    confusion: dict[str, list[list[int]]] = {}
    band_index = {b: i for i, b in enumerate(BAND_ORDER)}

    for item in items:
        rows = sorted(samples.get(item.item_id, []), key=lambda s: s.sample_id)
        matrix = [[0, 0, 0] for _ in range(3)]
        if not rows:
            per_item[item.item_id] = 0.0
            confusion[item.item_id] = matrix
            continue

        def predict(sample: LabeledSample):
            try:
                b = similarity(sample.student, item.gold, item.ontology, item.scoring)
                return sample.sample_id, b.band
            except Exception as exc:
                log.warning("item %s sample %s failed to score: %s", item.item_id, sample.sample_id, exc)
                return sample.sample_id, None

        if parallelism > 1:
            with ThreadPoolExecutor(max_workers=parallelism) as pool:
                predictions = dict(pool.map(predict, rows))
        else:
            predictions = dict(map(predict, rows))

        correct = 0
        for sample in rows:
            predicted = predictions[sample.sample_id]
            if predicted is not None:
                matrix[band_index[sample.human_band]][band_index[predicted]] += 1
                if predicted == sample.human_band:
                    correct += 1
        per_item[item.item_id] = correct / len(rows)
        confusion[item.item_id] = matrix

    macro = sum(per_item.values()) / len(per_item) if per_item else 0.0
    return EvalResult(per_item=per_item, macro_average=macro, confusion=confusion, label=label)


def render_table(result: EvalResult, fmt: str = "text") -> str:
    """Item-wise accuracy table (percentages, one decimal) plus the average."""
    headers = ["Model"] + list(result.per_item) + ["Average"]
    values = [result.label] + [f"{100 * v:.1f}" for v in result.per_item.values()]
    values.append(f"{100 * result.macro_average:.1f}")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(headers)
        writer.writerow(values)
        return buf.getvalue()
    if fmt == "markdown":
        lines = [
            "| " + " | ".join(headers) + " |",
            "|" + "|".join("---" for _ in headers) + "|",
            "| " + " | ".join(values) + " |",
        ]
        return "\n".join(lines) + "\n"
    if fmt == "text":
        widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
        head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
        row = "  ".join(v.rjust(w) for v, w in zip(values, widths))
        return head + "\n" + row + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def parse_csv_table(document: str) -> tuple[str, dict[str, float], float]:
    """Inverse of render_table(csv): label, per-item percentages, average."""
    rows = list(csv.reader(io.StringIO(document)))
    if len(rows) != 2:
        raise ValueError("expected a header row and one value row")
    headers, values = rows
    label = values[0]
    per_item = {h: float(v) for h, v in zip(headers[1:-1], values[1:-1])}
    return label, per_item, float(values[-1])


# ---------------------------------------------------------------------------
# Synthetic pack generation.
# ---------------------------------------------------------------------------


def _build_ontology(rng: random.Random) -> Ontology:
    parent: dict[str, str] = {}
    for branch in ("Entity", "Process", "Condition"):
        parent[branch] = "Phenomenon"
        for i in range(1, rng.randint(2, 3) + 1):
            mid = f"{branch}_{i}"
            parent[mid] = branch
            for j in range(1, rng.randint(1, 2) + 1):
                parent[f"{mid}_State_{j}"] = mid
    return Ontology(root="Phenomenon", parent=parent, relations=frozenset(_RELATIONS))


def _spread_blooms(n: int, highest: BloomLevel, rng: random.Random) -> list[BloomLevel]:
    """Ascending-ish Bloom levels topping out exactly at the item's highest."""
    levels = [BloomLevel(min(highest.value, 1 + round(i * (highest.value - 1) / max(n - 1, 1)))) for i in range(n)]
    levels[-1] = highest
    return levels


def _build_gold(item_id: str, ontology: Ontology, highest: BloomLevel, rng: random.Random) -> Srg:
    leafish = sorted(c for c in ontology.concepts if ontology.depth[c] >= 2)
    n_nodes = rng.randint(5, 6)
    concepts = rng.sample(leafish, min(n_nodes, len(leafish)))
    blooms = _spread_blooms(len(concepts), highest, rng)
    nodes = []
    for i, (concept, bloom) in enumerate(zip(concepts, blooms)):
        x0, y0 = rng.uniform(0.0, 0.6), rng.uniform(0.0, 0.6)
        region = (round(x0, 3), round(y0, 3), round(x0 + 0.3, 3), round(y0 + 0.3, 3))
        nodes.append(
            SrgNode(
                id=f"g{i + 1}",
                concept=concept,
                bloom=bloom,
                evidence=Evidence(text=f"area showing {concept}", region=region),
            )
        )
    n_edges = rng.randint(4, min(5, len(nodes) * (len(nodes) - 1)))
    edges: list[SrgEdge] = []
    seen = set()
    while len(edges) < n_edges:
        a, b = rng.sample(range(len(nodes)), 2)
        rel = rng.choice(_RELATIONS)
        key = (nodes[a].id, nodes[b].id, rel)
        if key in seen:
            continue
        seen.add(key)
        edges.append(SrgEdge(*key, evidence=Evidence(text=f"{rel} mark")))
    return Srg(nodes=tuple(nodes), edges=tuple(edges), role=Role.GOLD, item_id=item_id)


def _auto_phi(gold: Srg) -> dict:
    phi = {}
    gold_nodes = {n.id: n for n in gold.nodes}
    for n in gold.nodes:
        if n.concept in phi:
            continue
        phi[n.concept] = HintTemplate(
            key=n.concept,
            hint_text=f"Show {n.concept.replace('_', ' ').lower()} in your sketch.",
            overlay=(
                OverlayPrimitive(kind="marker", region=n.evidence.region or (0.0, 0.0, 1.0, 1.0)),
                OverlayPrimitive(kind="label", region=n.evidence.region or (0.0, 0.0, 1.0, 1.0), text=n.concept),
            ),
        )
    for e in gold.edges:
        src, tgt = gold_nodes[e.source], gold_nodes[e.target]
        key = (src.concept, e.relation, tgt.concept)
        if key in phi:
            continue
        r1 = src.evidence.region or (0.0, 0.0, 1.0, 1.0)
        r2 = tgt.evidence.region or (0.0, 0.0, 1.0, 1.0)
        arrow = (
            (r1[0] + r1[2]) / 2,
            (r1[1] + r1[3]) / 2,
            (r2[0] + r2[2]) / 2,
            (r2[1] + r2[3]) / 2,
        )
        phi[key] = HintTemplate(
            key=key,
            hint_text=f"Connect {src.concept} to {tgt.concept} to show what it {e.relation.replace('_', ' ')}.",
            overlay=(OverlayPrimitive(kind="arrow", region=arrow, text=e.relation),),
        )
    return phi


def student_copy(gold: Srg) -> Srg:
    """Gold graph re-rooted as a student graph with fresh node ids."""
    id_map = {n.id: f"s{i + 1}" for i, n in enumerate(gold.nodes)}
    nodes = tuple(replace(n, id=id_map[n.id]) for n in gold.nodes)
    edges = tuple(replace(e, source=id_map[e.source], target=id_map[e.target]) for e in gold.edges)
    return Srg(nodes=nodes, edges=edges, role=Role.STUDENT, item_id=gold.item_id)


def remove_elements(g: Srg, node_ids: set[str], edge_keys: set[tuple[str, str, str]]) -> Srg:
    nodes = tuple(n for n in g.nodes if n.id not in node_ids)
    kept = {n.id for n in nodes}
    edges = tuple(
        e for e in g.edges if e.key not in edge_keys and e.source in kept and e.target in kept
    )
    return Srg(nodes=nodes, edges=edges, role=g.role, item_id=g.item_id)


def _degrade_to_band(item: ItemSpec, target: Band, rng: random.Random, max_tries: int = 200) -> Srg:
    """Randomly delete elements until the scored band matches the target."""
    base = student_copy(item.gold)
    total = len(base.nodes) + len(base.edges)
    for _ in range(max_tries):
        if target is Band.DEVELOPING:
            k = rng.randint(2, 3)
            mid = [n.id for n in base.nodes if 2 <= n.bloom.value <= 4]
            pool_nodes = mid or [n.id for n in base.nodes]
            node_ids = set(rng.sample(pool_nodes, min(k - 1, len(pool_nodes)))) if k > 1 else set()
            remaining_edges = [e.key for e in base.edges]
            edge_keys = set(rng.sample(remaining_edges, min(1, len(remaining_edges))))
        else:  # Beginning: at least 60% of the elements gone
            k = max(math.ceil(0.6 * total), 1)
            node_ids = set(rng.sample([n.id for n in base.nodes], min(len(base.nodes) - 1, k)))
            edge_keys = set()
        candidate = remove_elements(base, node_ids, edge_keys)
        b = similarity(candidate, item.gold, item.ontology, item.scoring)
        if b.band is target:
            return candidate
    raise RuntimeError(f"could not degrade {item.item_id} to {target.value} in {max_tries} tries")


def _proficient_sample(item: ItemSpec, rng: random.Random) -> Srg:
    base = student_copy(item.gold)
    style = rng.randint(0, 2)
    if style == 0:
        return base
    if style == 1:  # evidence-text tweak only
        nodes = tuple(
            replace(n, evidence=Evidence(text=f"student drawing of {n.concept}", region=n.evidence.region))
            for n in base.nodes
        )
        return Srg(nodes=nodes, edges=base.edges, role=Role.STUDENT, item_id=base.item_id)
    if base.edges:  # drop one edge if the band survives
        victim = rng.choice([e.key for e in base.edges])
        candidate = remove_elements(base, set(), {victim})
        b = similarity(candidate, item.gold, item.ontology, item.scoring)
        if b.band is Band.PROFICIENT:
            return candidate
    return base


def generate_item(item_id: str, seed: int, highest: BloomLevel | None = None) -> ItemSpec:
    rng = random.Random(f"{item_id}:{seed}")
    ontology = _build_ontology(rng)
    highest = highest or _DEFAULT_HIGHEST.get(item_id, BloomLevel.ANALYZE)
    gold = _build_gold(item_id, ontology, highest, rng)
    return ItemSpec(
        item_id=item_id,
        prompt_text=f"Draw a model that explains the {item_id} phenomenon, labeling each part.",
        image_refs=(f"sketch://{item_id}/prompt",),
        rubric_text=(
            f"Item {item_id}: full credit requires every listed concept, the relations "
            "between them, and reasoning at the expected cognitive level."
        ),
        gold=gold,
        ontology=ontology,
        phi=_auto_phi(gold),
        scoring=ScoringParams(),
        highest_bloom=highest,
    ).validate()


def generate_pack(
    seed: int = 42,
    item_ids: tuple[str, ...] = DEFAULT_ITEM_IDS,
    samples_per_band: int = 10,
) -> tuple[list[ItemSpec], dict[str, list[LabeledSample]]]:
    """Deterministic synthetic pack with verified planted band labels."""
    items = []
    samples: dict[str, list[LabeledSample]] = {}
    for item_id in item_ids:
        item = generate_item(item_id, seed)
        items.append(item)
        rng = random.Random(f"samples:{item_id}:{seed}")
        rows: list[LabeledSample] = []
        counter = 1
        for band_label in BAND_ORDER:
            for _ in range(samples_per_band):
                if band_label is Band.PROFICIENT:
                    g = _proficient_sample(item, rng)
                else:
                    g = _degrade_to_band(item, band_label, rng)
                rows.append(LabeledSample(sample_id=f"{item_id.lower()}-{counter:03d}", student=g, human_band=band_label))
                counter += 1
        samples[item.item_id] = rows
    return items, samples


def write_pack(root: Path, items: list[ItemSpec], samples: dict[str, list[LabeledSample]]):
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for item in items:
        save_item_dir(root / item.item_id, item, samples.get(item.item_id, []))


# ---------------------------------------------------------------------------
# Calibration-study data: degradations whose band flips bracket a planted
# gamma1, so grid search must recover it.
# ---------------------------------------------------------------------------


def _mutate_for_calibration(item: ItemSpec, rng: random.Random) -> Srg:
    base = student_copy(item.gold)
    nodes = {n.id: n for n in base.nodes}
    edges = {e.key: e for e in base.edges}
    # Random mix of deletions, Bloom regressions, and off-ontology extras.
    for nid in list(nodes):
        if rng.random() < 0.25 and len(nodes) > 1:
            del nodes[nid]
            for key in [k for k in edges if nid in (k[0], k[1])]:
                del edges[key]
    for key in list(edges):
        if rng.random() < 0.3:
            del edges[key]
    for nid in list(nodes):
        n = nodes[nid]
        if rng.random() < 0.45 and n.bloom.value > 1:
            nodes[nid] = replace(n, bloom=BloomLevel(rng.randint(1, n.bloom.value - 1)))
    if rng.random() < 0.3:
        extra_id = f"x{rng.randint(1, 99)}"
        if extra_id not in nodes:
            nodes[extra_id] = SrgNode(id=extra_id, concept="Off_Rubric_Mark", bloom=BloomLevel.REMEMBER)
    return Srg(
        nodes=tuple(sorted(nodes.values(), key=lambda n: n.id)),
        edges=tuple(sorted(edges.values(), key=lambda e: e.key)),
        role=Role.STUDENT,
        item_id=base.item_id,
    )


def make_calibration_records(
    planted_gamma1: float = 0.3,
    seed: int = 7,
    n_stable: int = 24,
    window: float = 0.045,
) -> list[CalibrationRecord]:
    """Labeled records whose banding is maximized exactly at planted_gamma1.

    The composite score is affine in gamma1 once alignment and edit distance
    are fixed, so each candidate's band-threshold crossings are computed
    analytically; records crossing just left and just right of the planted
    value pin the grid-search optimum, while stable records anchor accuracy.
    """
    item = generate_item("CAL-1", seed, highest=BloomLevel.CREATE)
    base_params = ScoringParams()
    rng = random.Random(seed)

    def components(g: Srg) -> tuple[float, float]:
        b0 = similarity(g, item.gold, item.ontology, replace(base_params, gamma1=0.0, gamma2=1.0))
        b1 = similarity(g, item.gold, item.ontology, replace(base_params, gamma1=1.0, gamma2=0.0))
        return b0.s, b1.s  # s(gamma1=0), s(gamma1=1)

    def label_at(g: Srg, gamma1: float) -> Band:
        p = replace(base_params, gamma1=gamma1, gamma2=1.0 - gamma1)
        return similarity(g, item.gold, item.ontology, p).band

    left = []  # crossing in (planted - window, planted): penalizes smaller gamma1
    right = []  # crossing in (planted, planted + window): penalizes larger gamma1
    stable = []
    attempts = 0
    while (len(left) < 3 or len(right) < 3 or len(stable) < n_stable) and attempts < 20000:
        attempts += 1
        g = _mutate_for_calibration(item, rng)
        s0, s1 = components(g)
        crossings = []
        for theta in item.scoring.band_thresholds:
            if abs(s0 - s1) > 1e-12:
                gc = (s0 - theta) / (s0 - s1)
                if 0.0 < gc < 1.0:
                    crossings.append(gc)
        in_left = any(planted_gamma1 - window < gc < planted_gamma1 - 0.005 for gc in crossings)
        in_right = any(planted_gamma1 + 0.005 < gc < planted_gamma1 + window for gc in crossings)
        near = any(abs(gc - planted_gamma1) <= 0.005 for gc in crossings)
        if near:
            continue  # too close to the planted value to label cleanly
        rec = CalibrationRecord(student=g, gold=item.gold, ontology=item.ontology, label=label_at(g, planted_gamma1))
        if in_left and len(left) < 3:
            left.append(rec)
        elif in_right and len(right) < 3:
            right.append(rec)
        elif not crossings and len(stable) < n_stable:
            stable.append(rec)
    if len(left) < 1 or len(right) < 1:
        raise RuntimeError("calibration data search failed to bracket the planted gamma1")
    return left + right + stable

"""Assessment items and pack-directory IO.

An item bundles everything needed to assess one prompt: the gold graph, its
ontology, the reverse mapping from gold elements to visual hints, and the
scoring parameters. Packs lay items out on disk as

    pack/<item_id>/
        item.json            prompt, rubric text, scoring params
        ontology.json
        gold.srg.json
        phi.json             hint templates
        samples/<sid>.srg.json
        labels.csv           sample_id,band
"""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IncompleteMapping, LayoutError, SchemaError, SpecValidationError
from .feedback import HintTemplate, OverlayPrimitive, PhiMap
from .ontology import Ontology, ontology_from_obj, ontology_to_obj
from .scoring import Band, ScoringParams
from .srg import BloomLevel, Role, Srg, parse_srg, serialize_srg, validate_against_ontology

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ItemSpec:
    item_id: str
    prompt_text: str
    image_refs: tuple[str, ...]
    rubric_text: str
    gold: Srg
    ontology: Ontology
    phi: PhiMap
    scoring: ScoringParams = field(default_factory=ScoringParams)
    highest_bloom: BloomLevel = BloomLevel.REMEMBER

    def validate(self):
        report = validate_against_ontology(self.gold, self.ontology)
        if not report.ok:
            issues = ", ".join(f"{i.kind}:{i.value}" for i in report.issues)
            raise SpecValidationError(f"item {self.item_id}: gold graph does not resolve: {issues}")
        missing = missing_phi_keys(self.phi, self.gold)
        if missing:
            raise IncompleteMapping(f"item {self.item_id}: phi lacks templates for {missing}")
        if self.gold.role is not Role.GOLD:
            raise SpecValidationError(f"item {self.item_id}: gold graph role is {self.gold.role.value}")
        return self


@dataclass(frozen=True)
class LabeledSample:
    sample_id: str
    student: Srg
    human_band: Band


def missing_phi_keys(phi: PhiMap, gold: Srg) -> list:
    gold_nodes = {n.id: n for n in gold.nodes}
    missing = []
    for n in gold.nodes:
        if n.concept not in phi:
            missing.append(n.concept)
    for e in gold.edges:
        key = (gold_nodes[e.source].concept, e.relation, gold_nodes[e.target].concept)
        if key not in phi:
            missing.append(key)
    return sorted(set(missing), key=str)


def _overlay_from_obj(raw, where: str) -> tuple[OverlayPrimitive, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: overlay must be an array")
    prims = []
    for p in raw:
        if not isinstance(p, dict) or "kind" not in p:
            raise SchemaError(f"{where}: overlay entries need a kind")
        region = p.get("region")
        prims.append(
            OverlayPrimitive(
                kind=p["kind"],
                region=tuple(region) if region is not None else None,
                anchor=p.get("anchor"),
                text=p.get("text"),
            )
        )
    return tuple(prims)


def _resolve_anchors(prims: tuple[OverlayPrimitive, ...], gold: Srg) -> tuple[OverlayPrimitive, ...]:
    """Swap anchor-by-concept primitives for the gold node's evidence region."""
    by_concept = {}
    for n in sorted(gold.nodes, key=lambda n: n.id):
        by_concept.setdefault(n.concept, n.evidence.region)
    out = []
    for p in prims:
        if p.region is None and p.anchor is not None:
            region = by_concept.get(p.anchor) or (0.0, 0.0, 1.0, 1.0)
            p = OverlayPrimitive(kind=p.kind, region=region, anchor=p.anchor, text=p.text)
        out.append(p)
    return tuple(out)


def phi_from_obj(data, gold: Srg) -> PhiMap:
    if not isinstance(data, dict):
        raise SchemaError("phi document must be an object")
    phi: PhiMap = {}
    for i, entry in enumerate(data.get("nodes", [])):
        where = f"phi nodes[{i}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("concept"), str):
            raise SchemaError(f"{where}: needs a concept")
        if not isinstance(entry.get("hint_text"), str):
            raise SchemaError(f"{where}: needs hint_text")
        overlay = _resolve_anchors(_overlay_from_obj(entry.get("overlay"), where), gold)
        phi[entry["concept"]] = HintTemplate(key=entry["concept"], hint_text=entry["hint_text"], overlay=overlay)
    for i, entry in enumerate(data.get("edges", [])):
        where = f"phi edges[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: must be an object")
        try:
            key = (entry["source_concept"], entry["relation"], entry["target_concept"])
        except KeyError as exc:
            raise SchemaError(f"{where}: missing {exc}") from None
        if not isinstance(entry.get("hint_text"), str):
            raise SchemaError(f"{where}: needs hint_text")
        overlay = _resolve_anchors(_overlay_from_obj(entry.get("overlay"), where), gold)
        phi[key] = HintTemplate(key=key, hint_text=entry["hint_text"], overlay=overlay)
    return phi


def phi_to_obj(phi: PhiMap) -> dict:
    nodes = []
    edges = []
    for key in sorted(phi, key=str):
        t = phi[key]
        overlay = [
            {
                "kind": p.kind,
                "region": list(p.region) if p.region is not None else None,
                "anchor": p.anchor,
                "text": p.text,
            }
            for p in t.overlay
        ]
        if isinstance(key, tuple):
            edges.append(
                {
                    "source_concept": key[0],
                    "relation": key[1],
                    "target_concept": key[2],
                    "hint_text": t.hint_text,
                    "overlay": overlay,
                }
            )
        else:
            nodes.append({"concept": key, "hint_text": t.hint_text, "overlay": overlay})
    return {"nodes": nodes, "edges": edges}


def load_item_dir(path: Path) -> ItemSpec:
    path = Path(path)
    required = ["item.json", "ontology.json", "gold.srg.json", "phi.json"]
    for name in required:
        if not (path / name).is_file():
            raise LayoutError(f"{path}: missing {name}")
    try:
        meta = json.loads((path / "item.json").read_text())
        ontology = ontology_from_obj(json.loads((path / "ontology.json").read_text()))
        gold = parse_srg((path / "gold.srg.json").read_text())
        phi = phi_from_obj(json.loads((path / "phi.json").read_text()), gold)
    except IncompleteMapping:
        raise
    except (SchemaError, ValueError) as exc:
        raise SpecValidationError(f"{path}: {exc}") from exc

    if not isinstance(meta, dict) or not isinstance(meta.get("item_id"), str):
        raise SpecValidationError(f"{path}: item.json needs an item_id")
    prompt = meta.get("prompt", {})
    scoring = ScoringParams.from_obj(meta["scoring"]) if "scoring" in meta else ScoringParams()
    if "highest_bloom" in meta:
        highest = BloomLevel.from_name(meta["highest_bloom"])
    else:
        highest = max((n.bloom for n in gold.nodes), default=BloomLevel.REMEMBER)
    spec = ItemSpec(
        item_id=meta["item_id"],
        prompt_text=prompt.get("text", ""),
        image_refs=tuple(prompt.get("image_refs", [])),
        rubric_text=meta.get("rubric_text", ""),
        gold=gold,
        ontology=ontology,
        phi=phi,
        scoring=scoring,
        highest_bloom=highest,
    )
    return spec.validate()


def load_samples(path: Path, item: ItemSpec) -> list[LabeledSample]:
    """Load labeled samples; invalid sample files are skipped with a warning."""
    path = Path(path)
    labels_file = path / "labels.csv"
    samples_dir = path / "samples"
    if not labels_file.is_file() or not samples_dir.is_dir():
        raise LayoutError(f"{path}: missing samples/ or labels.csv")
    bands: dict[str, Band] = {}
    with labels_file.open() as fh:
        for row in csv.DictReader(fh):
            try:
                bands[row["sample_id"]] = Band(row["band"])
            except (KeyError, ValueError):
                log.warning("%s: bad label row %r, skipped", labels_file, row)
    out = []
    for sid in sorted(bands):
        sample_file = samples_dir / f"{sid}.srg.json"
        if not sample_file.is_file():
            log.warning("%s: labeled sample %s has no file, skipped", path, sid)
            continue
        try:
            student = parse_srg(sample_file.read_text())
        except Exception as exc:  # soft-skip any malformed sample
            log.warning("%s: invalid sample (%s), skipped", sample_file, exc)
            continue
        out.append(LabeledSample(sample_id=sid, student=student, human_band=bands[sid]))
    return out


def load_dataset(root: Path) -> tuple[list[ItemSpec], dict[str, list[LabeledSample]]]:
    """Load every item in a pack. Invalid gold specs fail hard; invalid
    samples are skipped with a warning."""
    root = Path(root)
    if not root.is_dir():
        raise LayoutError(f"{root} is not a directory")
    item_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not item_dirs:
        raise LayoutError(f"{root} contains no item directories")
    items: list[ItemSpec] = []
    samples: dict[str, list[LabeledSample]] = {}
    for d in item_dirs:
        spec = load_item_dir(d)
        items.append(spec)
        samples[spec.item_id] = load_samples(d, spec) if (d / "labels.csv").is_file() else []
    return items, samples


def save_item_dir(path: Path, item: ItemSpec, samples: list[LabeledSample] | None = None):
    """Write an item (and optional samples) in pack layout."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "item_id": item.item_id,
        "prompt": {"text": item.prompt_text, "image_refs": list(item.image_refs)},
        "rubric_text": item.rubric_text,
        "scoring": item.scoring.to_obj(),
        "highest_bloom": item.highest_bloom.label,
    }
    (path / "item.json").write_text(json.dumps(meta, indent=2))
    (path / "ontology.json").write_text(json.dumps(ontology_to_obj(item.ontology), indent=2))
    (path / "gold.srg.json").write_text(serialize_srg(item.gold))
    (path / "phi.json").write_text(json.dumps(phi_to_obj(item.phi), indent=2))
    if samples is not None:
        samples_dir = path / "samples"
        samples_dir.mkdir(exist_ok=True)
        with (path / "labels.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "band"])
            for s in samples:
                (samples_dir / f"{s.sample_id}.srg.json").write_text(serialize_srg(s.student))
                writer.writerow([s.sample_id, s.human_band.value])

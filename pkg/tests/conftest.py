import random
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("suite", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("suite")

from sketcheval.fixtures import water_dye_item, water_dye_revised, water_dye_student
from sketcheval.ontology import Ontology
from sketcheval.srg import BloomLevel, Evidence, Role, Srg, SrgEdge, SrgNode

RELATIONS = ("r_causes", "r_has", "r_feeds")


def make_random_ontology(rng: random.Random, n_concepts: int = 12) -> Ontology:
    parent = {f"c{i}": f"c{rng.randrange(i)}" for i in range(1, n_concepts)}
    return Ontology(root="c0", parent=parent, relations=frozenset(RELATIONS))


def make_random_srg(
    rng: random.Random,
    ontology: Ontology,
    role: Role,
    prefix: str,
    max_nodes: int = 5,
    max_edges: int = 6,
    min_nodes: int = 0,
) -> Srg:
    concepts = sorted(ontology.concepts)
    n = rng.randint(min_nodes, max_nodes)
    nodes = tuple(
        SrgNode(
            id=f"{prefix}{i}",
            concept=rng.choice(concepts),
            bloom=BloomLevel(rng.randint(1, 6)),
            evidence=Evidence(text=rng.choice(["", "drawn mark", "label text"])),
        )
        for i in range(n)
    )
    edges = []
    seen = set()
    if n >= 2:
        for _ in range(rng.randint(0, max_edges)):
            a, b = rng.sample(range(n), 2)
            key = (nodes[a].id, nodes[b].id, rng.choice(RELATIONS))
            if key not in seen:
                seen.add(key)
                edges.append(SrgEdge(*key))
    return Srg(nodes=nodes, edges=tuple(edges), role=role, item_id="rand")


def make_graph_pair(rng: random.Random, ontology: Ontology, max_nodes: int = 5, max_edges: int = 6):
    gs = make_random_srg(rng, ontology, Role.STUDENT, "s", max_nodes, max_edges)
    go = make_random_srg(rng, ontology, Role.GOLD, "g", max_nodes, max_edges)
    return gs, go


@pytest.fixture(scope="session")
def water_dye():
    item = water_dye_item()
    return item, water_dye_student(), water_dye_revised()


@pytest.fixture(scope="session")
def planted_calibration_records():
    from sketcheval.harness import make_calibration_records

    return make_calibration_records(planted_gamma1=0.3, seed=7)


@pytest.fixture(scope="session")
def synthetic_pack():
    from sketcheval.harness import generate_pack

    return generate_pack(seed=42, samples_per_band=10)

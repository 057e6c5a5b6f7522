import random
from fractions import Fraction

import pytest

from conftest import make_graph_pair, make_random_ontology, make_random_srg
from oracles import best_alignment_frac, pair_weight_frac

from sketcheval.alignment import AlignmentParams, best_alignment, f_oa, pair_weight
from sketcheval.ontology import Ontology
from sketcheval.srg import BloomLevel, Role, Srg, SrgNode

P = AlignmentParams()  # alpha 0.5, w_min 0.3, oa_norm max


def n(nid, concept, bloom):
    return SrgNode(id=nid, concept=concept, bloom=bloom)


@pytest.fixture(scope="module")
def cousin_ontology():
    return Ontology(
        root="r",
        parent={"mid": "r", "x": "mid", "y": "mid", "z": "r"},
        relations=frozenset({"causes"}),
    )


def test_pair_weight_identity(cousin_ontology):
    a = n("a", "x", BloomLevel.APPLY)
    b = n("b", "x", BloomLevel.APPLY)
    assert pair_weight(a, b, cousin_ontology, P) == 1.0


def test_pair_weight_bloom_mismatch(cousin_ontology):
    a = n("a", "x", BloomLevel.APPLY)
    b = n("b", "x", BloomLevel.ANALYZE)
    assert pair_weight(a, b, cousin_ontology, P) == 0.5


def test_pair_weight_cousins_same_bloom(cousin_ontology):
    # sim(x, y) = 2*1/(2+2) = 0.5 -> 0.5*0.5 + 0.5 = 0.75
    a = n("a", "x", BloomLevel.APPLY)
    b = n("b", "y", BloomLevel.APPLY)
    assert pair_weight(a, b, cousin_ontology, P) == pytest.approx(0.75)


def test_pair_weight_unknown_concept_scores_zero_sim(cousin_ontology):
    a = n("a", "made_up", BloomLevel.APPLY)
    b = n("b", "x", BloomLevel.APPLY)
    assert pair_weight(a, b, cousin_ontology, P) == pytest.approx(0.5)


def test_identity_alignment(water_dye):
    item = water_dye[0]
    a = best_alignment(item.gold.nodes, item.gold.nodes, item.ontology, P)
    assert len(a.pairs) == len(item.gold.nodes)
    assert all(p.weight == 1.0 for p in a.pairs)
    assert all(p.student_id == p.gold_id for p in a.pairs)
    assert f_oa(a, item.gold.nodes, item.gold.nodes, P) == 1.0


def test_empty_side_gives_empty_alignment(water_dye):
    item = water_dye[0]
    a = best_alignment((), item.gold.nodes, item.ontology, P)
    assert a.pairs == ()
    assert f_oa(a, (), item.gold.nodes, P) == 0.0
    both_empty = best_alignment((), (), item.ontology, P)
    assert f_oa(both_empty, (), (), P) == 1.0


def test_w_min_blocks_junk_matches(cousin_ontology):
    # sim(x, z) = 0 (lca root), blooms differ -> weight 0 < w_min
    vs = [n("s1", "x", BloomLevel.REMEMBER)]
    vo = [n("g1", "z", BloomLevel.CREATE)]
    a = best_alignment(vs, vo, cousin_ontology, P)
    assert a.pairs == ()


def test_oa_norm_sum_halves_identity(water_dye):
    item = water_dye[0]
    params = AlignmentParams(oa_norm="sum")
    a = best_alignment(item.gold.nodes, item.gold.nodes, item.ontology, params)
    assert f_oa(a, item.gold.nodes, item.gold.nodes, params) == pytest.approx(0.5)


def test_partial_match_f_oa(cousin_ontology):
    # 2 perfect pairs, |Vs|=3, |Vo|=4 -> 2/4
    vs = [n("s1", "x", BloomLevel.APPLY), n("s2", "y", BloomLevel.ANALYZE), n("s3", "made_up", BloomLevel.CREATE)]
    vo = [
        n("g1", "x", BloomLevel.APPLY),
        n("g2", "y", BloomLevel.ANALYZE),
        n("g3", "z", BloomLevel.REMEMBER),
        n("g4", "mid", BloomLevel.EVALUATE),
    ]
    a = best_alignment(vs, vo, cousin_ontology, P)
    perfect = [p for p in a.pairs if p.weight == 1.0]
    assert len(perfect) == 2
    assert f_oa(a, vs, vo, P) == pytest.approx(
        a.total_weight / 4
    )


def test_matches_bruteforce_on_random_instances():
    rng = random.Random(5)
    for _ in range(60):
        o = make_random_ontology(rng, n_concepts=rng.randint(3, 10))
        gs, go = make_graph_pair(rng, o, max_nodes=4, max_edges=0)
        a = best_alignment(gs.nodes, go.nodes, o, P)
        engine_total = sum(
            (pair_weight_frac(gs.node(p.student_id), go.node(p.gold_id), o, P) for p in a.pairs),
            Fraction(0),
        )
        assert engine_total == best_alignment_frac(gs.nodes, go.nodes, o, P)


def test_deterministic_tie_break_lexicographic(cousin_ontology):
    # Two interchangeable students and golds: every matching has total 2.0;
    # the lexicographically smallest pairing wins.
    vs = [n("s2", "x", BloomLevel.APPLY), n("s1", "x", BloomLevel.APPLY)]
    vo = [n("g2", "x", BloomLevel.APPLY), n("g1", "x", BloomLevel.APPLY)]
    a = best_alignment(vs, vo, cousin_ontology, P)
    assert [(p.student_id, p.gold_id) for p in a.pairs] == [("s1", "g1"), ("s2", "g2")]


def test_invariance_under_renaming_and_permutation():
    rng = random.Random(11)
    for _ in range(20):
        o = make_random_ontology(rng, n_concepts=8)
        gs = make_random_srg(rng, o, Role.STUDENT, "s", max_nodes=5, max_edges=0)
        go = make_random_srg(rng, o, Role.GOLD, "g", max_nodes=5, max_edges=0)
        a1 = best_alignment(gs.nodes, go.nodes, o, P)

        renamed = [SrgNode(f"zz{i}", node.concept, node.bloom, node.evidence) for i, node in enumerate(gs.nodes)]
        shuffled = list(renamed)
        rng.shuffle(shuffled)
        a2 = best_alignment(shuffled, go.nodes, o, P)

        assert a1.total_weight == pytest.approx(a2.total_weight, abs=1e-12)
        assert len(a1.pairs) == len(a2.pairs)
        assert f_oa(a1, gs.nodes, go.nodes, P) == pytest.approx(f_oa(a2, shuffled, go.nodes, P), abs=1e-12)


def test_perfect_extra_node_never_decreases_f_oa(water_dye):
    item, student, _ = water_dye
    a_before = best_alignment(student.nodes, item.gold.nodes, item.ontology, P)
    foa_before = f_oa(a_before, student.nodes, item.gold.nodes, P)
    # Add a student node exactly matching an unmatched gold node.
    matched_gold = {p.gold_id for p in a_before.pairs}
    unmatched = [g for g in item.gold.nodes if g.id not in matched_gold]
    assert unmatched
    extra = SrgNode("s_extra", unmatched[0].concept, unmatched[0].bloom)
    vs = list(student.nodes) + [extra]
    a_after = best_alignment(vs, item.gold.nodes, item.ontology, P)
    assert f_oa(a_after, vs, item.gold.nodes, P) >= foa_before

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from relprobe.lexicon import (
    IngestError,
    LexiconGraph,
    RelatumSet,
    Tuple,
    Vocabulary,
    build_target_inventory,
    expand_relatum_set,
    filter_to_vocab,
    ingest_tuples,
    load_relatum_sets,
    prune_ambiguous,
    symmetric_augment,
    write_relatum_sets,
    write_tuples,
)
from relprobe.relations import RELATIONS, Relation


def test_relation_reverse_involution():
    for r in RELATIONS:
        assert r.reverse.reverse is r
        assert r.symmetric == (r.reverse is r)
    assert Relation.HYP.reverse is Relation.HPO
    assert Relation.HOL.reverse is Relation.MER


def test_tuple_validation():
    Tuple("hot", Relation.ANT, "cold")
    with pytest.raises(ValueError):
        Tuple("hot", Relation.ANT, "hot")
    with pytest.raises(ValueError):
        Tuple("", Relation.ANT, "cold")
    with pytest.raises(ValueError):
        Tuple("hot stuff", Relation.ANT, "cold")


# --- ingestion ---------------------------------------------------------------

def test_ingest_native_jsonl(tmp_path):
    src = tmp_path / "t.jsonl"
    rows = [
        {"w": "robin", "r": "HYP", "v": "bird"},
        {"w": "robin", "r": "HYP", "v": "bird"},  # duplicate collapses
        {"w": "hot", "r": "ANT", "v": "cold", "pos": "N"},
        {"w": "runs", "r": "HYP", "v": "verb", "pos": "V"},  # non-noun dropped
        {"w": "bad row"},  # malformed dropped
    ]
    src.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
    tuples = ingest_tuples(src, "native-jsonl")
    assert tuples == {
        Tuple("robin", Relation.HYP, "bird"),
        Tuple("hot", Relation.ANT, "cold"),
    }


def test_ingest_hyperlex(tmp_path):
    src = tmp_path / "h.txt"
    src.write_text(
        "WORD1 WORD2 POS TYPE AVG_SCORE\n"
        "girl person N hyp-1 5.92\n"
        "person girl N rhyp-1 1.2\n"
        "hot cold N ant 0.1\n"
        "sofa couch N syn 6.0\n"
        "car wheel N mero 2.0\n"
        "hawk robin N cohyp 3.3\n"  # unmapped relation, dropped
        "run walk V hyp-2 2.2\n",   # non-noun, dropped
        encoding="utf-8",
    )
    tuples = ingest_tuples(src, "hyperlex-tsv")
    assert Tuple("girl", Relation.HYP, "person") in tuples
    assert Tuple("person", Relation.HPO, "girl") in tuples
    assert Tuple("hot", Relation.ANT, "cold") in tuples
    assert Tuple("sofa", Relation.SYN, "couch") in tuples
    assert Tuple("car", Relation.MER, "wheel") in tuples
    assert len(tuples) == 5


def test_ingest_category_norms(tmp_path):
    src = tmp_path / "norms.csv"
    src.write_text(
        "category,norm,pos\n"
        "fish,tuna,N\n"
        "fish,trout,N\n"
        "part of building,window,N\n"
        "a four-footed animal,dog,N\n",  # multi-word category -> malformed, dropped
        encoding="utf-8",
    )
    tuples = ingest_tuples(src, "category-norm-csv")
    assert Tuple("fish", Relation.HPO, "tuna") in tuples
    assert Tuple("fish", Relation.HPO, "trout") in tuples
    assert Tuple("building", Relation.MER, "window") in tuples
    assert len(tuples) == 3


def test_ingest_errors(tmp_path):
    with pytest.raises(IngestError):
        ingest_tuples(tmp_path / "missing.jsonl", "native-jsonl")
    src = tmp_path / "t.jsonl"
    src.write_text("", encoding="utf-8")
    with pytest.raises(IngestError):
        ingest_tuples(src, "native-jsonl")
    with pytest.raises(IngestError):
        ingest_tuples(src, "proprietary-xml")


def test_tuples_roundtrip(tmp_path):
    tuples = {Tuple("hot", Relation.ANT, "cold"), Tuple("robin", Relation.HYP, "bird")}
    path = tmp_path / "out.jsonl"
    write_tuples(tuples, path)
    assert ingest_tuples(path, "native-jsonl") == tuples


# --- augmentation ------------------------------------------------------------

def test_symmetric_augment_examples():
    hot_cold = {Tuple("hot", Relation.ANT, "cold")}
    assert symmetric_augment(hot_cold) == {
        Tuple("hot", Relation.ANT, "cold"),
        Tuple("cold", Relation.ANT, "hot"),
    }
    building = {Tuple("building", Relation.MER, "wall")}
    assert Tuple("wall", Relation.HOL, "building") in symmetric_augment(building)


WORDS = st.sampled_from(["a", "b", "c", "d", "e", "f", "g", "h"])


@st.composite
def tuple_sets(draw, max_size=12):
    pairs = draw(st.lists(
        st.tuples(WORDS, st.sampled_from(RELATIONS), WORDS).filter(lambda t: t[0] != t[2]),
        max_size=max_size,
    ))
    return {Tuple(w, r, v) for (w, r, v) in pairs}


@given(tuple_sets())
@settings(max_examples=200)
def test_augment_idempotent_and_conservative(tuples):
    once = symmetric_augment(tuples)
    assert symmetric_augment(once) == once
    assert once >= tuples
    # conservativity: nothing beyond the brute-force closure
    plain = {(t.target, t.relation.value, t.relatum) for t in tuples}
    closure = oracles.augment_closure(plain)
    assert {(t.target, t.relation.value, t.relatum) for t in once} == closure


@given(tuple_sets())
@settings(max_examples=100)
def test_augment_counts(tuples):
    once = symmetric_augment(tuples)
    # image of every tuple is present, so |aug| is |T| plus the new reverses
    reverses = {Tuple(t.relatum, t.relation.reverse, t.target) for t in tuples}
    assert once == tuples | reverses
    # reverse-pair bijection: reversing the augmented set maps onto itself
    assert {Tuple(t.relatum, t.relation.reverse, t.target) for t in once} == once


# --- graph expansion ---------------------------------------------------------

@pytest.fixture()
def toy_graph():
    g = LexiconGraph()
    g.add_edge("a/1", Relation.HYP, "b/1")
    g.add_edge("b/1", Relation.HYP, "c/1")
    g.add_edge("c/1", Relation.HYP, "d/1")
    g.add_edge("a/1", Relation.SYN, "e/1")
    g.add_edge("a/2", Relation.SYN, "f/1")
    return g


def test_expand_two_step_hypernyms(toy_graph):
    vocab = Vocabulary.from_words("abcdef")
    got = expand_relatum_set(toy_graph, "a", Relation.HYP, vocab)
    assert got.members == {"b", "c"}  # d is three steps away


def test_expand_unions_over_senses(toy_graph):
    vocab = Vocabulary.from_words("abcdef")
    got = expand_relatum_set(toy_graph, "a", Relation.SYN, vocab)
    assert got.members == {"e", "f"}


def test_expand_absent_target_is_empty_signal(toy_graph):
    got = expand_relatum_set(toy_graph, "zzz", Relation.HYP, Vocabulary.from_words("abc"))
    assert got.members == frozenset()


def test_expand_reverse_edges_present(toy_graph):
    vocab = Vocabulary.from_words("abcdef")
    got = expand_relatum_set(toy_graph, "c", Relation.HPO, vocab)
    assert got.members == {"a", "b"}  # b direct, a two HPO steps down


@given(st.sets(WORDS))
@settings(max_examples=50)
def test_expand_monotone_in_vocab(small_vocab_words):
    g = LexiconGraph()
    g.add_edge("a/1", Relation.HYP, "b/1")
    g.add_edge("b/1", Relation.HYP, "c/1")
    small = Vocabulary.from_words(small_vocab_words)
    big = Vocabulary.from_words(set(small_vocab_words) | {"b", "c"})
    got_small = expand_relatum_set(g, "a", Relation.HYP, small)
    got_big = expand_relatum_set(g, "a", Relation.HYP, big)
    assert got_small.members <= got_big.members


# --- pruning -----------------------------------------------------------------

def test_prune_removes_from_all_sets():
    sets = [
        RelatumSet("ending", Relation.HPO, frozenset({"conclusion"})),
        RelatumSet("ending", Relation.SYN, frozenset({"conclusion", "termination"})),
    ]
    pruned = {s.relation: s.members for s in prune_ambiguous(sets)}
    assert pruned[Relation.HPO] == frozenset()
    assert pruned[Relation.SYN] == {"termination"}


def test_prune_disjoint_noop():
    sets = [
        RelatumSet("w", Relation.HYP, frozenset({"a"})),
        RelatumSet("w", Relation.SYN, frozenset({"b"})),
    ]
    assert {s.members for s in prune_ambiguous(sets)} == {frozenset({"a"}), frozenset({"b"})}


def test_prune_triple_membership():
    sets = [
        RelatumSet("w", Relation.HYP, frozenset({"x", "a"})),
        RelatumSet("w", Relation.HPO, frozenset({"x"})),
        RelatumSet("w", Relation.SYN, frozenset({"x", "b"})),
    ]
    pruned = {s.relation: s.members for s in prune_ambiguous(sets)}
    assert all("x" not in m for m in pruned.values())
    assert pruned[Relation.HYP] == {"a"} and pruned[Relation.SYN] == {"b"}


def test_prune_rejects_mixed_targets():
    with pytest.raises(ValueError):
        prune_ambiguous([
            RelatumSet("a", Relation.HYP, frozenset({"x"})),
            RelatumSet("b", Relation.HYP, frozenset({"y"})),
        ])


@given(st.dictionaries(st.sampled_from(RELATIONS), st.sets(WORDS), min_size=2))
@settings(max_examples=100)
def test_prune_pairwise_disjoint(by_relation):
    sets = [RelatumSet("zzz", r, frozenset(m)) for r, m in by_relation.items()]
    pruned = prune_ambiguous(sets)
    for i, a in enumerate(pruned):
        for b in pruned[i + 1:]:
            assert not (a.members & b.members)
    # matches the counting oracle
    expected = oracles.prune({r.value: set(m) for r, m in by_relation.items()})
    assert {s.relation.value: set(s.members) for s in pruned} == expected


# --- inventories and fixture-level checks -------------------------------------

def test_build_target_inventory():
    tuples = {
        Tuple("robin", Relation.HYP, "bird"),
        Tuple("sparrow", Relation.HYP, "bird"),
        Tuple("robin", Relation.HYP, "animal"),
        Tuple("hot", Relation.ANT, "cold"),
    }
    vocab = Vocabulary.from_words(["robin", "sparrow", "bird", "animal", "cold"])
    inv = build_target_inventory(tuples, vocab)
    assert inv[Relation.HYP] == ["robin", "sparrow"]
    assert inv[Relation.ANT] == []  # "hot" is out of vocabulary
    assert build_target_inventory(set(), vocab) == {r: [] for r in RELATIONS}


def test_fixture_expansion_grows_mean_sizes(fixture_run):
    """Graph expansion never shrinks a relation's mean relatum-set size."""
    from relprobe.lexicon import tuple_relata

    build = fixture_run["build"]
    graph = LexiconGraph.load(fixture_run["cfg"].lexicon_graph)
    source = tuple_relata(build.tuples)
    for relation in RELATIONS:
        before, after = [], []
        for target, by_rel in source.items():
            if relation not in by_rel:
                continue
            src_members = {w for w in by_rel[relation] if w in build.vocab}
            expanded = src_members | expand_relatum_set(graph, target, relation, build.vocab).members
            before.append(len(src_members))
            after.append(len(expanded))
        if before:
            assert sum(after) / len(after) >= sum(before) / len(before)


def test_relatum_sets_roundtrip(tmp_path, fixture_run):
    build = fixture_run["build"]
    path = tmp_path / "sets.jsonl"
    write_relatum_sets(build.relatum_sets, path)
    loaded = load_relatum_sets(path)
    assert loaded == {t: dict(rs) for t, rs in build.relatum_sets.items()}


def test_fixture_sets_disjoint_and_exclude_target(fixture_run):
    for target, by_rel in fixture_run["build"].relatum_sets.items():
        rels = sorted(by_rel, key=RELATIONS.index)
        for i, r in enumerate(rels):
            assert target not in by_rel[r]
            for s in rels[i + 1:]:
                assert not (by_rel[r] & by_rel[s])


def test_fixture_ambiguous_relatum_was_pruned(fixture_run):
    sets = fixture_run["build"].relatum_sets["ending"]
    for members in sets.values():
        assert "conclusion" not in members
    assert sets[Relation.SYN] == {"termination"}
    assert sets[Relation.HPO] == {"finale"}


def test_filter_to_vocab():
    tuples = {Tuple("hot", Relation.ANT, "cold"), Tuple("hot", Relation.ANT, "warm")}
    vocab = Vocabulary.from_words(["hot", "cold"])
    assert filter_to_vocab(tuples, vocab) == {Tuple("hot", Relation.ANT, "cold")}

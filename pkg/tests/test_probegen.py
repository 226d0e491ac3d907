import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relprobe.probegen import (
    PromptTemplate,
    PronunciationLexicon,
    TemplateError,
    generate_probe_set,
    load_templates,
    probe_id,
    select_determiner,
    verbalize,
)
from relprobe.relations import RELATIONS, Relation

PAPER_PROMPT_COUNTS = {"HYP": 7, "HPO": 4, "HOL": 7, "MER": 6, "ANT": 9, "SYN": 7}


def test_shipped_templates_inventory():
    templates = load_templates()
    counts = {}
    for t in templates:
        counts[t.relation.value] = counts.get(t.relation.value, 0) + 1
    assert counts == PAPER_PROMPT_COUNTS
    assert len(templates) == 40


def test_shipped_templates_slot_grammar():
    for t in load_templates():
        assert t.template.count("[W]") == 1
        assert t.template.endswith("[V]")
        assert t.template.index("[W]") < t.template.index("[V]")


def test_template_validation():
    PromptTemplate("ok", Relation.HYP, "[DET] [W] is a kind of [DET] [V]")
    with pytest.raises(TemplateError):
        PromptTemplate("x", Relation.HYP, "no target slot [V]")
    with pytest.raises(TemplateError):
        PromptTemplate("x", Relation.HYP, "[W] but no prediction slot")
    with pytest.raises(TemplateError):
        PromptTemplate("x", Relation.HYP, "[W] with trailing [V] words")
    with pytest.raises(TemplateError):
        PromptTemplate("x", Relation.HYP, "[V] precedes [W]")
    with pytest.raises(TemplateError):
        PromptTemplate("x", Relation.HYP, "[DET] floats alone [W] then [V]")


def test_select_determiner():
    assert select_determiner("wall") == "a"
    assert select_determiner("apple") == "an"
    assert select_determiner("hour") == "an"
    assert select_determiner("university") == "a"
    assert select_determiner("egg") == "an"
    with pytest.raises(ValueError):
        select_determiner("")


def test_pronunciation_lexicon_file_overrides(tmp_path):
    path = tmp_path / "pron.json"
    path.write_text('{"ewe": "an", "wall": "an"}', encoding="utf-8")
    lex = PronunciationLexicon.load(path)
    assert lex.determiner("wall") == "an"  # explicit entry wins
    assert lex.determiner("ewe") == "an"
    assert lex.determiner("apple") == "an"  # default rule still applies


def test_verbalize_two_surfaces():
    t = PromptTemplate("hol-2", Relation.HOL, "[DET] [W] is a part of [DET] [V]")
    p = verbalize("wall", t)
    assert p.surface_a == "a wall is a part of a [V]"
    assert p.surface_an == "a wall is a part of an [V]"
    assert p.det_before_v
    assert p.surfaces() == [("a", p.surface_a), ("an", p.surface_an)]


def test_verbalize_single_surface():
    t = PromptTemplate("syn-3", Relation.SYN, "the word [W] has a similar meaning as the word [V]")
    p = verbalize("ending", t)
    assert p.surface_a == "the word ending has a similar meaning as the word [V]"
    assert p.surface_an is None
    assert p.surfaces() == [("none", p.surface_a)]


def test_verbalize_resolves_target_determiner():
    t = PromptTemplate("hyp-2", Relation.HYP, "[DET] [W] is a kind of [DET] [V]")
    p = verbalize("apple", t)
    assert p.surface_a == "an apple is a kind of a [V]"
    assert p.surface_an == "an apple is a kind of an [V]"


def test_surfaces_keep_terminal_slot():
    for t in load_templates():
        p = verbalize("thing", t)
        for _, surface in p.surfaces():
            assert surface.endswith("[V]")
            assert "[W]" not in surface
            assert "[DET] [W]" not in surface


def test_probe_ids_stable_and_distinct():
    t1 = PromptTemplate("hyp-1", Relation.HYP, "[DET] [W] is a type of [DET] [V]")
    a, b = verbalize("robin", t1), verbalize("robin", t1)
    assert a.id == b.id == probe_id(Relation.HYP, "hyp-1", "robin")
    assert verbalize("sparrow", t1).id != a.id


def test_probe_count_identity():
    templates = load_templates()
    inventory = {
        Relation.HYP: ["robin", "sparrow"],
        Relation.ANT: ["hot"],
        Relation.SYN: [],
    }
    probes = generate_probe_set(inventory, templates)
    per_relation = {}
    for p in probes:
        per_relation[p.relation.value] = per_relation.get(p.relation.value, 0) + 1
    assert per_relation == {"HYP": 2 * 7, "ANT": 1 * 9}


def test_empty_template_list_warns_and_skips(caplog):
    inventory = {Relation.HYP: ["robin"]}
    with caplog.at_level("WARNING"):
        probes = generate_probe_set(inventory, [])
    assert probes == []
    assert any("no templates" in r.message for r in caplog.records)


@given(st.sampled_from(sorted(["robin", "apple", "hour", "wall", "unit", "egg"])))
@settings(max_examples=30)
def test_determiner_consistent_between_variants(word):
    for t in load_templates():
        if not t.det_before_v or "[DET] [W]" not in t.template:
            continue
        p = verbalize(word, t)
        # the resolved determiner before the target never differs across variants
        head_a = p.surface_a.replace("a [V]", "").replace("an [V]", "")
        head_an = p.surface_an.replace("a [V]", "").replace("an [V]", "")
        assert head_a == head_an


def test_fixture_probe_count_identity(fixture_run):
    build = fixture_run["build"]
    by_rel = {r: 0 for r in RELATIONS}
    for p in build.probes.values():
        by_rel[p.relation] += 1
    templates_per_rel = {r: sum(1 for t in build.templates if t.relation is r) for r in RELATIONS}
    for r in RELATIONS:
        assert by_rel[r] == len(build.inventory[r]) * templates_per_rel[r]

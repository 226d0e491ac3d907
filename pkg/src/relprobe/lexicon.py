"""Tuple ingestion, symmetric augmentation, and relatum-set construction.

The gold data flows through this module in a fixed order: ingest tuples from
source files, restrict them to the shared vocabulary, augment via symmetric /
reverse relations, expand per-target relatum sets over a sense-level lexical
graph, and finally prune relationally ambiguous relata so that the relatum
sets of distinct relations are mutually exclusive for every target word.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .relations import RELATIONS, Relation

log = logging.getLogger(__name__)

TUPLE_FORMATS = ("hyperlex-tsv", "category-norm-csv", "native-jsonl")


class IngestError(Exception):
    """Raised when a tuple, graph, or vocabulary source cannot be used."""


def _check_word_form(word: str, role: str) -> str:
    if not word:
        raise ValueError(f"{role} must be a non-empty word form")
    if any(ch.isspace() for ch in word):
        raise ValueError(f"{role} must be a single orthographic word: {word!r}")
    return word


@dataclass(frozen=True, order=True)
class Tuple:
    """A (target word, relation, relatum) triple, the atomic gold datum."""

    target: str
    relation: Relation
    relatum: str

    def __post_init__(self):
        _check_word_form(self.target, "target")
        _check_word_form(self.relatum, "relatum")
        if self.target == self.relatum:
            raise ValueError(f"target and relatum must differ: {self.target!r}")


@dataclass(frozen=True)
class RelatumSet:
    """The gold set of relata for one (target, relation) pair."""

    target: str
    relation: Relation
    members: frozenset[str]

    def __post_init__(self):
        if self.target in self.members:
            raise ValueError(f"relatum set of {self.target!r} contains the target")


@dataclass(frozen=True)
class Vocabulary:
    """A lowercase-normalized word-form set with a provenance label."""

    words: frozenset[str]
    provenance: str = ""

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    @staticmethod
    def from_words(words: Iterable[str], provenance: str = "") -> "Vocabulary":
        return Vocabulary(frozenset(w.strip().lower() for w in words if w.strip()), provenance)

    @staticmethod
    def load(path: str | Path, provenance: str | None = None) -> "Vocabulary":
        """Read a one-word-per-line UTF-8 vocabulary file."""
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            return Vocabulary.from_words(fh, provenance if provenance is not None else path.name)

    @staticmethod
    def intersect(vocabs: Iterable["Vocabulary"]) -> "Vocabulary":
        vocabs = list(vocabs)
        if not vocabs:
            raise IngestError("cannot intersect an empty list of vocabularies")
        words = frozenset.intersection(*(v.words for v in vocabs))
        label = "intersection(" + ",".join(v.provenance for v in vocabs) + ")"
        return Vocabulary(words, label)


class LexiconGraph:
    """Sense-level lexical graph: nodes are "word/idx" senses, edges carry relations.

    Reverse edges are completed on insertion so the stored graph always
    satisfies: HYP(a,b) <=> HPO(b,a), HOL(a,b) <=> MER(b,a), and ANT/SYN
    edges are present in both directions.
    """

    def __init__(self):
        self._edges: dict[str, dict[Relation, set[str]]] = defaultdict(lambda: defaultdict(set))
        self._senses: dict[str, list[str]] = defaultdict(list)

    def add_sense(self, sense: str) -> None:
        word = sense_word(sense)
        if sense not in self._senses[word]:
            self._senses[word].append(sense)
        self._edges[sense]  # materialize the node

    def add_edge(self, src: str, relation: Relation, dst: str) -> None:
        self.add_sense(src)
        self.add_sense(dst)
        self._edges[src][relation].add(dst)
        self._edges[dst][relation.reverse].add(src)

    def senses(self, word: str) -> list[str]:
        return list(self._senses.get(word, ()))

    def neighbors(self, sense: str, relation: Relation) -> frozenset[str]:
        return frozenset(self._edges.get(sense, {}).get(relation, ()))

    def __contains__(self, word: str) -> bool:
        return word in self._senses

    @staticmethod
    def load(path: str | Path) -> "LexiconGraph":
        """Read line-oriented JSON records {"sense": "word/idx", "edges": [[REL, "word/idx"], ...]}."""
        graph = LexiconGraph()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    sense = rec["sense"]
                    graph.add_sense(sense)
                    for label, other in rec.get("edges", ()):
                        graph.add_edge(sense, Relation(label), other)
                except (KeyError, ValueError, TypeError) as exc:
                    raise IngestError(f"{path}:{lineno}: bad graph record ({exc})") from exc
        return graph


def sense_word(sense: str) -> str:
    """Word form of a "word/idx" sense node."""
    word, _, idx = sense.rpartition("/")
    if not word or not idx.isdigit():
        raise ValueError(f"malformed sense id: {sense!r}")
    return word


# ---------------------------------------------------------------------------
# Tuple ingestion
# ---------------------------------------------------------------------------

#: Multi-level gold-pair labels of the hyperlex format, mapped onto our labels.
#: hyp-N scores "w1 is a kind of w2" (w2 is the hypernym), rhyp-N the reverse;
#: mero rows are oriented whole-first: (w1, MER, w2) states w2 is a part of w1.
_HYPERLEX_TYPE = {
    "syn": Relation.SYN,
    "ant": Relation.ANT,
    "mero": Relation.MER,
}


@dataclass
class IngestStats:
    parsed: int = 0
    dropped_non_noun: int = 0
    dropped_malformed: int = 0
    dropped_unmapped: int = 0
    missing_pos: int = 0


def ingest_tuples(path: str | Path, format_tag: str, stats: IngestStats | None = None) -> set[Tuple]:
    """Parse one tuple source file into a deduplicated tuple set.

    Non-noun rows and malformed rows are dropped with counted warnings.
    Raises IngestError for an unreadable file, an unknown format tag, or a
    file that yields zero tuples.
    """
    if format_tag not in TUPLE_FORMATS:
        raise IngestError(f"unknown tuple format tag: {format_tag!r}")
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"tuple source not found: {path}")
    stats = stats if stats is not None else IngestStats()

    parser = {
        "hyperlex-tsv": _parse_hyperlex,
        "category-norm-csv": _parse_category_norms,
        "native-jsonl": _parse_native_jsonl,
    }[format_tag]
    tuples = parser(path, stats)

    if stats.dropped_non_noun or stats.dropped_malformed or stats.dropped_unmapped:
        log.warning(
            "%s: dropped %d non-noun, %d malformed, %d unmapped rows",
            path.name, stats.dropped_non_noun, stats.dropped_malformed, stats.dropped_unmapped,
        )
    if stats.missing_pos:
        log.warning("%s: %d rows lack a part-of-speech field, kept as-is", path.name, stats.missing_pos)
    if not tuples:
        raise IngestError(f"zero tuples parsed from {path}")
    stats.parsed = len(tuples)
    return tuples


def _noun_row(pos: str | None, stats: IngestStats) -> bool:
    # Rows without a POS field pass through (sources are assumed pre-filtered),
    # but they are counted so the caller can audit.
    if pos is None or pos == "":
        stats.missing_pos += 1
        return True
    return pos.strip().upper() in ("N", "NOUN")


def _make_tuple(target: str, relation: Relation, relatum: str, stats: IngestStats) -> Tuple | None:
    try:
        return Tuple(target.strip().lower(), relation, relatum.strip().lower())
    except ValueError:
        stats.dropped_malformed += 1
        return None


def _parse_hyperlex(path: Path, stats: IngestStats) -> set[Tuple]:
    tuples: set[Tuple] = set()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            return tuples
        for line in fh:
            fields = line.split()
            if len(fields) < 4:
                if line.strip():
                    stats.dropped_malformed += 1
                continue
            w1, w2, pos, pair_type = fields[0], fields[1], fields[2], fields[3]
            if not _noun_row(pos, stats):
                stats.dropped_non_noun += 1
                continue
            base = pair_type.split("-")[0].lower()
            if base == "hyp":
                t = _make_tuple(w1, Relation.HYP, w2, stats)
            elif base == "rhyp":
                t = _make_tuple(w1, Relation.HPO, w2, stats)
            elif base in _HYPERLEX_TYPE:
                t = _make_tuple(w1, _HYPERLEX_TYPE[base], w2, stats)
            else:  # no-rel, cohyp, ... carry no relation of ours
                stats.dropped_unmapped += 1
                continue
            if t is not None:
                tuples.add(t)
    return tuples


#: Category names of the norm corpus that denote part-whole membership rather
#: than class membership, e.g. "part of building" -> target "building".
_PART_PREFIX = "part of "


def _parse_category_norms(path: Path, stats: IngestStats) -> set[Tuple]:
    tuples: set[Tuple] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "category" not in reader.fieldnames or "norm" not in reader.fieldnames:
            raise IngestError(f"{path}: category-norm-csv needs 'category' and 'norm' columns")
        for row in reader:
            category = (row.get("category") or "").strip().lower()
            norm = (row.get("norm") or "").strip().lower()
            if not _noun_row(row.get("pos"), stats):
                stats.dropped_non_noun += 1
                continue
            if category.startswith(_PART_PREFIX):
                # "part of X" categories yield meronymy: the norm is a part of X.
                t = _make_tuple(category[len(_PART_PREFIX):], Relation.MER, norm, stats)
            else:
                # Norms are subtypes of their category: the norm is a hyponym.
                t = _make_tuple(category, Relation.HPO, norm, stats)
            if t is not None:
                tuples.add(t)
    return tuples


def _parse_native_jsonl(path: Path, stats: IngestStats) -> set[Tuple]:
    tuples: set[Tuple] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                relation = Relation(rec["r"])
            except (json.JSONDecodeError, KeyError, ValueError):
                stats.dropped_malformed += 1
                continue
            if not _noun_row(rec.get("pos"), stats):
                stats.dropped_non_noun += 1
                continue
            t = _make_tuple(str(rec.get("w", "")), relation, str(rec.get("v", "")), stats)
            if t is not None:
                tuples.add(t)
    return tuples


def write_tuples(tuples: Iterable[Tuple], path: str | Path) -> None:
    """Write tuples as native JSONL, sorted for reproducible bytes.

    Tuples reaching this point have passed the nouns-only filter, so the
    emitted rows carry pos N and reload without warnings.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for t in sorted(tuples):
            fh.write(json.dumps(
                {"w": t.target, "r": t.relation.value, "v": t.relatum, "pos": "N"}) + "\n")


# ---------------------------------------------------------------------------
# Augmentation and inventories
# ---------------------------------------------------------------------------

def filter_to_vocab(tuples: Iterable[Tuple], vocab: Vocabulary) -> set[Tuple]:
    """Keep tuples whose target and relatum are both in the shared vocabulary."""
    return {t for t in tuples if t.target in vocab and t.relatum in vocab}


def symmetric_augment(tuples: set[Tuple]) -> set[Tuple]:
    """Close a tuple set under symmetry and reverse relations.

    For a symmetric relation r, (w, r, v) contributes (v, r, w); for a
    reverse pair (r1, r2), (w, r2, v) contributes (v, r1, w). Duplicates
    collapse by set semantics, so the result is a superset of the input and
    the operation is idempotent.
    """
    out = set(tuples)
    for t in tuples:
        out.add(Tuple(t.relatum, t.relation.reverse, t.target))
    return out


def build_target_inventory(tuples: Iterable[Tuple], vocab: Vocabulary) -> dict[Relation, list[str]]:
    """Per-relation sorted lists of distinct target words restricted to vocab."""
    inventory: dict[Relation, set[str]] = {r: set() for r in RELATIONS}
    for t in tuples:
        if t.target in vocab:
            inventory[t.relation].add(t.target)
    counts = {r.value: len(ws) for r, ws in inventory.items()}
    log.info("target inventory: %s", counts)
    return {r: sorted(ws) for r, ws in inventory.items()}


def tuple_relata(tuples: Iterable[Tuple]) -> dict[str, dict[Relation, set[str]]]:
    """Relata taken directly from the tuple sources, grouped per target."""
    out: dict[str, dict[Relation, set[str]]] = defaultdict(lambda: defaultdict(set))
    for t in tuples:
        out[t.target][t.relation].add(t.relatum)
    return out


# ---------------------------------------------------------------------------
# Relatum-set expansion and pruning
# ---------------------------------------------------------------------------

def expand_relatum_set(
    graph: LexiconGraph,
    target: str,
    relation: Relation,
    vocab: Vocabulary,
) -> RelatumSet:
    """Union of graph relata over every sense of the target.

    Direct relata of any sense count for every relation; for HYP and HPO,
    relata reachable within two same-label edges are included as well
    (one- and two-step sets are unioned). Members are filtered to the
    vocabulary and the target itself is excluded. A target absent from the
    graph yields an empty member set, which is a signal, not an error.
    """
    members: set[str] = set()
    for sense in graph.senses(target):
        step1 = graph.neighbors(sense, relation)
        reached = set(step1)
        if relation in (Relation.HYP, Relation.HPO):
            for mid in step1:
                reached |= graph.neighbors(mid, relation)
        members.update(sense_word(s) for s in reached)
    members = {w for w in members if w in vocab and w != target}
    return RelatumSet(target, relation, frozenset(members))


def prune_ambiguous(sets: Iterable[RelatumSet]) -> list[RelatumSet]:
    """Drop every word form that appears in two or more relation sets of one target.

    Input sets must share a single target; output sets are pairwise disjoint.
    """
    sets = list(sets)
    targets = {s.target for s in sets}
    if len(targets) > 1:
        raise ValueError(f"prune_ambiguous needs sets of a single target, got {sorted(targets)}")
    seen: dict[str, int] = defaultdict(int)
    for s in sets:
        for w in s.members:
            seen[w] += 1
    ambiguous = {w for w, n in seen.items() if n >= 2}
    return [RelatumSet(s.target, s.relation, s.members - ambiguous) for s in sets]


def build_relatum_sets(
    graph: LexiconGraph,
    tuples: Iterable[Tuple],
    vocab: Vocabulary,
) -> tuple[dict[str, dict[Relation, frozenset[str]]], dict[str, dict[Relation, dict[str, str]]]]:
    """Expanded, pruned relatum sets for every target word of the tuple set.

    Source relata and graph-expanded relata are unioned; per-member provenance
    ("source", "graph", or "both") is returned alongside for audit output.
    Only non-empty post-pruning sets appear in the result.
    """
    from_tuples = tuple_relata(tuples)
    targets = sorted(from_tuples)
    pruned_sets: dict[str, dict[Relation, frozenset[str]]] = {}
    provenance: dict[str, dict[Relation, dict[str, str]]] = {}
    for target in targets:
        raw: list[RelatumSet] = []
        prov: dict[Relation, dict[str, str]] = {}
        for relation in RELATIONS:
            source = {w for w in from_tuples[target].get(relation, set()) if w in vocab}
            graphed = expand_relatum_set(graph, target, relation, vocab).members
            members = frozenset(source | graphed)
            raw.append(RelatumSet(target, relation, members))
            prov[relation] = {
                w: ("both" if w in source and w in graphed else "source" if w in source else "graph")
                for w in members
            }
        kept: dict[Relation, frozenset[str]] = {}
        kept_prov: dict[Relation, dict[str, str]] = {}
        for s in prune_ambiguous(raw):
            if s.members:
                kept[s.relation] = s.members
                kept_prov[s.relation] = {w: prov[s.relation][w] for w in s.members}
        if kept:
            pruned_sets[target] = kept
            provenance[target] = kept_prov
    return pruned_sets, provenance


def write_relatum_sets(sets: Mapping[str, Mapping[Relation, frozenset[str]]], path: str | Path) -> None:
    """Write relatum sets as JSONL rows {"w": ..., "r": ..., "Y": [...]}."""
    with open(path, "w", encoding="utf-8") as fh:
        for target in sorted(sets):
            for relation in RELATIONS:
                members = sets[target].get(relation)
                if members:
                    fh.write(json.dumps({"w": target, "r": relation.value, "Y": sorted(members)}) + "\n")


def load_relatum_sets(path: str | Path) -> dict[str, dict[Relation, frozenset[str]]]:
    out: dict[str, dict[Relation, frozenset[str]]] = defaultdict(dict)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                out[rec["w"]][Relation(rec["r"])] = frozenset(rec["Y"])
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise IngestError(f"{path}:{lineno}: bad relatum-set record ({exc})") from exc
    return dict(out)

"""Prompt templates and probe verbalization.

Templates carry three slot markers: [W] for the target word, [V] for the
open prediction slot (always string-final), and [DET] for an indefinite
determiner. A [DET] directly before [W] is resolved morphophonetically at
verbalization time; a [DET] directly before [V] makes the probe a two-surface
probe (one with "a", one with "an") so the determiner cannot leak a clue
about the expected answer.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .relations import Relation

log = logging.getLogger(__name__)

W_SLOT = "[W]"
V_SLOT = "[V]"
DET_SLOT = "[DET]"

DET_W = f"{DET_SLOT} {W_SLOT}"
DET_V = f"{DET_SLOT} {V_SLOT}"


class TemplateError(ValueError):
    """A template violates the slot grammar."""


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    relation: Relation
    template: str

    def __post_init__(self):
        t = self.template
        if t.count(W_SLOT) != 1:
            raise TemplateError(f"{self.id}: template must contain exactly one {W_SLOT}")
        if t.count(V_SLOT) != 1:
            raise TemplateError(f"{self.id}: template must contain exactly one {V_SLOT}")
        if not t.endswith(V_SLOT):
            raise TemplateError(f"{self.id}: {V_SLOT} must be string-final")
        if t.index(W_SLOT) > t.index(V_SLOT):
            raise TemplateError(f"{self.id}: {W_SLOT} must precede {V_SLOT}")
        leftover = t.replace(DET_W, "").replace(DET_V, "")
        if DET_SLOT in leftover:
            raise TemplateError(f"{self.id}: {DET_SLOT} must directly precede {W_SLOT} or {V_SLOT}")

    @property
    def det_before_v(self) -> bool:
        return self.template.endswith(DET_V)


@dataclass(frozen=True)
class Probe:
    """A verbalized prompt instance with the prediction slot left open.

    surface_a is the single surface for templates without a determiner before
    [V]; otherwise surface_a/surface_an carry the two determiner variants.
    Surfaces keep the terminal [V] marker so downstream consumers know where
    the prediction slot sits.
    """

    id: str
    target: str
    relation: Relation
    prompt_id: str
    surface_a: str
    surface_an: str | None = None

    @property
    def det_before_v(self) -> bool:
        return self.surface_an is not None

    def surfaces(self) -> list[tuple[str, str]]:
        """(variant, surface) pairs; variant is "none" for single-surface probes."""
        if self.surface_an is None:
            return [("none", self.surface_a)]
        return [("a", self.surface_a), ("an", self.surface_an)]


def probe_id(relation: Relation, prompt_id: str, target: str) -> str:
    """Stable probe id, re-joinable across runs."""
    key = f"{relation.value}|{prompt_id}|{target}"
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Determiner selection
# ---------------------------------------------------------------------------

_VOWEL_LETTERS = frozenset("aeiou")


class PronunciationLexicon:
    """Maps word forms to their indefinite determiner.

    Lookup order: explicit word->onset entries from an optional lexicon file,
    then a shipped prefix list of orthographic exceptions, then the naive
    first-letter rule.
    """

    def __init__(self, entries: Mapping[str, str] | None = None,
                 an_exceptions: Iterable[str] = (), a_exceptions: Iterable[str] = ()):
        self._entries = {w.lower(): d for w, d in (entries or {}).items()}
        # Longest-prefix-first so e.g. "honest" wins over a shorter overlap.
        self._an_prefixes = sorted((p.lower() for p in an_exceptions), key=len, reverse=True)
        self._a_prefixes = sorted((p.lower() for p in a_exceptions), key=len, reverse=True)

    @staticmethod
    def default() -> "PronunciationLexicon":
        data = json.loads(resources.files("relprobe.data").joinpath("determiner_exceptions.json").read_text("utf-8"))
        return PronunciationLexicon({}, data["an"], data["a"])

    @staticmethod
    def load(path: str | Path) -> "PronunciationLexicon":
        """Read a word->determiner JSON file ({"hour": "an", ...}) on top of the defaults."""
        with open(path, encoding="utf-8") as fh:
            entries = json.load(fh)
        base = PronunciationLexicon.default()
        base._entries.update({w.lower(): d for w, d in entries.items()})
        return base

    def determiner(self, word: str) -> str:
        word = word.lower()
        hit = self._entries.get(word)
        if hit in ("a", "an"):
            return hit
        for prefix in self._an_prefixes:
            if word.startswith(prefix):
                return "an"
        for prefix in self._a_prefixes:
            if word.startswith(prefix):
                return "a"
        return "an" if word[:1] in _VOWEL_LETTERS else "a"


def select_determiner(word: str, lexicon: PronunciationLexicon | None = None) -> str:
    """"a" or "an" for the given word, by initial phone where known."""
    if not word:
        raise ValueError("cannot select a determiner for an empty word")
    return (lexicon or PronunciationLexicon.default()).determiner(word)


# ---------------------------------------------------------------------------
# Verbalization
# ---------------------------------------------------------------------------

def verbalize(target: str, template: PromptTemplate, lexicon: PronunciationLexicon | None = None) -> Probe:
    """Fill [W] (and its determiner) with the target, leaving [V] open."""
    lexicon = lexicon or PronunciationLexicon.default()
    filled = template.template
    if DET_W in filled:
        filled = filled.replace(DET_W, f"{select_determiner(target, lexicon)} {target}")
    else:
        filled = filled.replace(W_SLOT, target)
    pid = probe_id(template.relation, template.id, target)
    if template.det_before_v:
        return Probe(
            id=pid,
            target=target,
            relation=template.relation,
            prompt_id=template.id,
            surface_a=filled.replace(DET_V, f"a {V_SLOT}"),
            surface_an=filled.replace(DET_V, f"an {V_SLOT}"),
        )
    return Probe(id=pid, target=target, relation=template.relation, prompt_id=template.id, surface_a=filled)


def generate_probe_set(
    inventory: Mapping[Relation, list[str]],
    templates: Iterable[PromptTemplate],
    lexicon: PronunciationLexicon | None = None,
) -> list[Probe]:
    """All probes: the product of target words and prompts, per relation."""
    lexicon = lexicon or PronunciationLexicon.default()
    by_relation: dict[Relation, list[PromptTemplate]] = {}
    for t in templates:
        by_relation.setdefault(t.relation, []).append(t)
    probes: list[Probe] = []
    for relation, targets in inventory.items():
        rel_templates = by_relation.get(relation, [])
        if targets and not rel_templates:
            log.warning("no templates for %s: %d targets produce no probes", relation.value, len(targets))
            continue
        for target in targets:
            for template in sorted(rel_templates, key=lambda t: t.id):
                probes.append(verbalize(target, template, lexicon))
    return probes


# ---------------------------------------------------------------------------
# Template and probe files
# ---------------------------------------------------------------------------

def load_templates(path: str | Path | None = None) -> list[PromptTemplate]:
    """Read JSONL templates {"id":..., "r":..., "template":...}; None loads the shipped set."""
    if path is None:
        text = resources.files("relprobe.data").joinpath("templates.jsonl").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    templates = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            templates.append(PromptTemplate(rec["id"], Relation(rec["r"]), rec["template"]))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise TemplateError(f"templates line {lineno}: {exc}") from exc
    ids = [t.id for t in templates]
    if len(ids) != len(set(ids)):
        raise TemplateError("duplicate template ids")
    return templates


def write_probes(probes: Iterable[Probe], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in sorted(probes, key=lambda p: (p.relation.value, p.prompt_id, p.target)):
            rec = {
                "id": p.id,
                "w": p.target,
                "r": p.relation.value,
                "prompt": p.prompt_id,
                "surface_a": p.surface_a,
                "surface_an": p.surface_an,
            }
            fh.write(json.dumps(rec) + "\n")


def load_probes(path: str | Path) -> dict[str, Probe]:
    probes: dict[str, Probe] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                p = Probe(rec["id"], rec["w"], Relation(rec["r"]), rec["prompt"],
                          rec["surface_a"], rec.get("surface_an"))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise TemplateError(f"{path}:{lineno}: bad probe record ({exc})") from exc
            probes[p.id] = p
    return probes

"""Agent response ingestion and normalization.

Two kinds of raw material arrive here: human answer lists collected per
participant and per probe, and model top-K score files. Both are
normalized into per-probe ResponseDistributions from which deterministic
ranked lists are derived. Model probes with a determiner before the open slot
come as an a/an pair and are merged into one synthetic distribution.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

from .probegen import Probe
from .relations import Relation

log = logging.getLogger(__name__)

MASS_TOL = 1e-9


class ResponseError(Exception):
    """Raised for schema violations and unusable response files."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class AgentId:
    """One random agent: the pooled human group or a single model."""

    name: str
    kind: str = "model"  # "human-pool" | "model"
    family: str | None = None
    params: int | None = None
    pretraining: str | None = None  # "mlm" | "clm" for models

    def __post_init__(self):
        if self.kind not in ("human-pool", "model"):
            raise ValueError(f"unknown agent kind: {self.kind!r}")


@dataclass(frozen=True)
class HumanRawResponse:
    participant: str
    subset: str
    probe: str
    words: tuple[str, ...]

    def __post_init__(self):
        if len(self.words) > 5:
            raise ValueError(f"at most 5 words per response, got {len(self.words)}")
        for w in self.words:
            if not w or any(ch.isspace() for ch in w):
                raise ValueError(f"response words must be single tokens: {w!r}")


@dataclass(frozen=True)
class ResponseDistribution:
    """Probability (or normalized frequency) over words for one probe.

    Human pools keep their integer token counts so downstream consumers can
    work with exact rationals; model distributions are stored top-K truncated
    and are never renormalized (all metrics depend only on ranks and
    membership).
    """

    probe: str
    agent: str
    probs: Mapping[str, float]
    counts: Mapping[str, int] | None = None

    def __post_init__(self):
        if not self.probs:
            raise ResponseError(f"empty distribution for probe {self.probe}")
        total = 0.0
        for word, p in self.probs.items():
            if not math.isfinite(p) or p <= 0:
                raise ResponseError(f"probe {self.probe}: bad probability {p!r} for {word!r}")
            total += p
        if total > 1 + MASS_TOL:
            raise ResponseError(f"probe {self.probe}: probability mass {total} exceeds 1")

    def support(self) -> frozenset[str]:
        return frozenset(self.probs)

    def fractions(self) -> dict[str, Fraction]:
        """Exact probabilities; available only for count-backed distributions."""
        if self.counts is None:
            raise ValueError("no exact counts stored for this distribution")
        total = sum(self.counts.values())
        return {w: Fraction(c, total) for w, c in self.counts.items()}


@dataclass(frozen=True)
class RankedList:
    """Deterministically ordered response words with scores and OOR flags."""

    probe: str
    agent: str
    words: tuple[str, ...]
    scores: tuple[float, ...]
    oor: tuple[bool, ...] = ()

    def top(self, k: int | None) -> tuple[str, ...]:
        return self.words if k is None else self.words[:k]

    def __len__(self) -> int:
        return len(self.words)


def rank(dist: ResponseDistribution, k: int | None = None) -> RankedList:
    """Top-k words by probability, ties broken lexicographically ascending."""
    ordered = sorted(dist.probs.items(), key=lambda it: (-it[1], it[0]))
    if k is not None:
        ordered = ordered[:k]
    return RankedList(
        probe=dist.probe,
        agent=dist.agent,
        words=tuple(w for w, _ in ordered),
        scores=tuple(p for _, p in ordered),
    )


# ---------------------------------------------------------------------------
# Human ingestion
# ---------------------------------------------------------------------------

def load_bogus_key(path: str | Path) -> dict[str, frozenset[str]]:
    """Bogus-probe answer key: JSONL {"probe": ..., "accepted": [...]}."""
    key: dict[str, frozenset[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                key[rec["probe"]] = frozenset(w.lower() for w in rec["accepted"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ResponseError(f"bad bogus-key record ({exc})", lineno) from exc
    return key


@dataclass
class HumanIngestReport:
    rows: int = 0
    rejected_submissions: list[tuple[str, str]] = field(default_factory=list)
    skipped_unknown_probe: int = 0
    accepted_rows: int = 0


def read_human_rows(path: str | Path) -> list[HumanRawResponse]:
    rows: list[HumanRawResponse] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                rows.append(HumanRawResponse(
                    participant=str(rec["participant"]),
                    subset=str(rec["subset"]),
                    probe=rec["probe"],
                    words=tuple(w.strip().lower() for w in rec["words"]),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ResponseError(f"bad human response record ({exc})", lineno) from exc
    return rows


def ingest_human(
    path: str | Path,
    bogus_key: Mapping[str, frozenset[str]],
    known_probes: Iterable[str] | None = None,
    agent_name: str = "human",
    report: HumanIngestReport | None = None,
) -> dict[str, ResponseDistribution]:
    """Pool raw human lists into per-probe frequency distributions.

    A (participant, subset) submission is rejected outright when any of its
    bogus-probe answers falls outside the accepted set. Accepted answers are
    pooled as unweighted token counts per probe and normalized.
    """
    rows = read_human_rows(path)
    report = report if report is not None else HumanIngestReport()
    report.rows = len(rows)

    # First pass: find submissions that miss a bogus probe.
    rejected: set[tuple[str, str]] = set()
    for row in rows:
        accepted = bogus_key.get(row.probe)
        if accepted is not None and not (set(row.words) and set(row.words) <= accepted):
            rejected.add((row.participant, row.subset))
    seen_submissions = {(r.participant, r.subset) for r in rows}
    report.rejected_submissions = sorted(rejected)
    if rejected:
        log.warning("rejected %d/%d submissions on bogus probes", len(rejected), len(seen_submissions))
    if seen_submissions and rejected == seen_submissions:
        raise ResponseError("every submission failed a bogus probe; nothing to pool")

    known = set(known_probes) if known_probes is not None else None
    counts: dict[str, Counter[str]] = defaultdict(Counter)
    for row in rows:
        if (row.participant, row.subset) in rejected or row.probe in bogus_key:
            continue
        if known is not None and row.probe not in known:
            report.skipped_unknown_probe += 1
            continue
        counts[row.probe].update(row.words)
        report.accepted_rows += 1
    if report.skipped_unknown_probe:
        log.warning("skipped %d rows with unknown probe ids", report.skipped_unknown_probe)

    dists: dict[str, ResponseDistribution] = {}
    for probe, counter in counts.items():
        total = sum(counter.values())
        if total == 0:
            continue
        dists[probe] = ResponseDistribution(
            probe=probe,
            agent=agent_name,
            probs={w: c / total for w, c in counter.items()},
            counts=dict(counter),
        )
    return dists


# ---------------------------------------------------------------------------
# Model ingestion
# ---------------------------------------------------------------------------

def read_model_rows(path: str | Path) -> list[dict]:
    """Parse and schema-check a model response file; raises on the first bad row."""
    rows: list[dict] = []
    seen: set[tuple[str, str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ResponseError(f"not valid JSON ({exc.msg})", lineno) from exc
            for field_name in ("probe", "agent", "variant", "topk"):
                if field_name not in rec:
                    raise ResponseError(f"missing field {field_name!r}", lineno)
            if rec["variant"] not in ("a", "an", "none"):
                raise ResponseError(f"bad variant {rec['variant']!r}", lineno)
            if not isinstance(rec["topk"], list) or not rec["topk"]:
                raise ResponseError("topk must be a non-empty list", lineno)
            words = set()
            for item in rec["topk"]:
                if (not isinstance(item, list) or len(item) != 2
                        or not isinstance(item[0], str) or not isinstance(item[1], (int, float))):
                    raise ResponseError(f"bad topk entry {item!r}", lineno)
                word, score = item
                if not math.isfinite(score) or score <= 0:
                    raise ResponseError(f"non-finite or non-positive score for {word!r}", lineno)
                if word in words:
                    raise ResponseError(f"duplicate word {word!r} in topk", lineno)
                words.add(word)
            key = (rec["probe"], rec["agent"], rec["variant"])
            if key in seen:
                raise ResponseError(f"duplicate (probe, variant) row for {key}", lineno)
            seen.add(key)
            rec["_line"] = lineno
            rows.append(rec)
    return rows


def ingest_model(
    path: str | Path,
    probes: Mapping[str, Probe] | None = None,
    agent_name: str | None = None,
) -> dict[tuple[str, str], ResponseDistribution]:
    """Model response file -> distributions keyed by (probe id, variant).

    When the probe set is supplied, every det-before-[V] probe must come with
    both the "a" and the "an" variant, and single-surface probes with exactly
    the "none" variant.
    """
    rows = read_model_rows(path)
    dists: dict[tuple[str, str], ResponseDistribution] = {}
    names = {r["agent"] for r in rows}
    if agent_name is not None and names - {agent_name}:
        raise ResponseError(f"{path}: file mixes agents {sorted(names)}, expected {agent_name!r}")
    for rec in rows:
        dist = ResponseDistribution(
            probe=rec["probe"],
            agent=rec["agent"],
            probs={w: float(s) for w, s in rec["topk"]},
        )
        dists[(rec["probe"], rec["variant"])] = dist

    if probes is not None:
        by_probe: dict[str, set[str]] = defaultdict(set)
        for pid, variant in dists:
            if pid not in probes:
                raise ResponseError(f"{path}: unknown probe id {pid!r}")
            by_probe[pid].add(variant)
        for pid, variants in sorted(by_probe.items()):
            expected = {"a", "an"} if probes[pid].det_before_v else {"none"}
            if variants != expected:
                raise ResponseError(
                    f"{path}: probe {pid} has variants {sorted(variants)}, expected {sorted(expected)}"
                )
    return dists


def merge_determiner(
    d_a: ResponseDistribution,
    d_an: ResponseDistribution,
    alpha: float,
) -> ResponseDistribution:
    """Convex combination alpha*d_a + (1-alpha)*d_an over the union support.

    alpha is the relative corpus frequency of "a" against "an"; words missing
    from one side contribute probability zero there.
    """
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if d_a.probe != d_an.probe:
        raise ValueError(f"cannot merge distributions of different probes: {d_a.probe} vs {d_an.probe}")
    merged: dict[str, float] = {}
    for word in set(d_a.probs) | set(d_an.probs):
        p = alpha * d_a.probs.get(word, 0.0) + (1 - alpha) * d_an.probs.get(word, 0.0)
        if p > 0:
            merged[word] = p
    return ResponseDistribution(probe=d_a.probe, agent=d_a.agent, probs=merged)


def resolve_model_lists(
    dists: Mapping[tuple[str, str], ResponseDistribution],
    probes: Mapping[str, Probe],
    alpha: float,
    k: int | None = None,
) -> dict[str, RankedList]:
    """Merge determiner variants where needed and rank every probe's distribution."""
    lists: dict[str, RankedList] = {}
    for pid in sorted({pid for pid, _ in dists}):
        probe = probes[pid]
        if probe.det_before_v:
            merged = merge_determiner(dists[(pid, "a")], dists[(pid, "an")], alpha)
        else:
            merged = dists[(pid, "none")]
        lists[pid] = rank(merged, k)
    return lists


# ---------------------------------------------------------------------------
# OOR accounting
# ---------------------------------------------------------------------------

def tag_oor(lst: RankedList, target_sets: Mapping[Relation, frozenset[str]]) -> RankedList:
    """Flag words outside every relatum set of the probe's target word."""
    in_any = frozenset().union(*target_sets.values()) if target_sets else frozenset()
    flags = tuple(w not in in_any for w in lst.words)
    return RankedList(lst.probe, lst.agent, lst.words, lst.scores, flags)


@dataclass
class OorSummary:
    """Corpus-level OOR accounting over tagged ranked lists.

    Token counts weight each word by its pooled count when counts are given
    (human pools); otherwise each listed word counts once.
    """

    tokens: int = 0
    oor_tokens: int = 0
    types: set[str] = field(default_factory=set)
    oor_types: set[str] = field(default_factory=set)
    lists: int = 0
    all_oor_lists: int = 0
    first_non_oor_ranks: list[int] = field(default_factory=list)

    def add(self, tagged: RankedList, counts: Mapping[str, int] | None = None) -> None:
        if not tagged.oor:
            raise ValueError("list must be tagged before OOR accounting")
        self.lists += 1
        first = None
        for rank_pos, (word, is_oor) in enumerate(zip(tagged.words, tagged.oor), start=1):
            n = counts.get(word, 1) if counts else 1
            self.tokens += n
            self.types.add(word)
            if is_oor:
                self.oor_tokens += n
                self.oor_types.add(word)
            elif first is None:
                first = rank_pos
        if first is None:
            self.all_oor_lists += 1
        else:
            self.first_non_oor_ranks.append(first)

    def as_dict(self) -> dict:
        return {
            "tokens": self.tokens,
            "oor_tokens": self.oor_tokens,
            "oor_token_rate": self.oor_tokens / self.tokens if self.tokens else 0.0,
            "types": len(self.types),
            "oor_types": len(self.oor_types),
            "oor_type_rate": len(self.oor_types) / len(self.types) if self.types else 0.0,
            "lists": self.lists,
            "all_oor_lists": self.all_oor_lists,
            "all_oor_rate": self.all_oor_lists / self.lists if self.lists else 0.0,
            "mean_first_non_oor_rank": (
                sum(self.first_non_oor_ranks) / len(self.first_non_oor_ranks)
                if self.first_non_oor_ranks else None
            ),
        }


def write_responses(rows: Iterable[dict], path: str | Path) -> None:
    """Write response rows in the bit-exact schema used by ingest_model."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in rows:
            fh.write(json.dumps(
                {"probe": rec["probe"], "agent": rec["agent"], "variant": rec["variant"], "topk": rec["topk"]},
            ) + "\n")

"""The five-metric evaluation suite over ranked lists and relatum sets.

All rank-based kernels are computed in exact rational arithmetic (Fraction);
response entropy is the only floating-point metric. Aggregation is always
mean-over-prompts first, then mean-over-targets (or tuples), matching the
two-level averaging used throughout.

Per-target and per-tuple breakdowns are kept because the statistical test
protocol and the frequency-correlation analysis both consume them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .lexicon import Tuple
from .probegen import Probe
from .relations import (
    ORDERED_PAIRS,
    PROTOTYPICALITY_RELATIONS,
    RELATIONS,
    Relation,
)
from .responses import RankedList, ResponseDistribution

log = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


@dataclass(frozen=True)
class PerTargetScore:
    target: str
    relation: Relation
    agent: str
    metric: str
    value: Fraction


@dataclass(frozen=True)
class PerTupleSymmetry:
    tuple: Tuple
    agent: str
    k: int
    value: Fraction


@dataclass
class MetricResult:
    metric: str
    relation: Relation
    agent: str
    value: Fraction | None
    per_target: list[PerTargetScore]
    #: binary outcome per (target, prompt) or (w, v, prompt); feeds McNemar
    outcomes: dict[tuple, int] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    def target_values(self) -> dict[str, Fraction]:
        return {s.target: s.value for s in self.per_target}


def _mean(values: Sequence[Fraction]) -> Fraction:
    return sum(values, ZERO) / len(values)


class EvalData:
    """Immutable probe/gold context shared by every metric kernel."""

    def __init__(
        self,
        probes: Mapping[str, Probe],
        relatum_sets: Mapping[str, Mapping[Relation, frozenset[str]]],
        tuples: Iterable[Tuple] = (),
    ):
        self.probes = dict(probes)
        self.relatum_sets = {t: dict(rs) for t, rs in relatum_sets.items()}
        self.tuples = frozenset(tuples)
        # relation -> target -> {prompt_id: probe_id}
        self.index: dict[Relation, dict[str, dict[str, str]]] = {r: {} for r in RELATIONS}
        for pid, probe in self.probes.items():
            self.index[probe.relation].setdefault(probe.target, {})[probe.prompt_id] = pid

    def prompts(self, relation: Relation) -> list[str]:
        seen: set[str] = set()
        for prompts in self.index[relation].values():
            seen.update(prompts)
        return sorted(seen)

    def gold(self, target: str, relation: Relation) -> frozenset[str] | None:
        members = self.relatum_sets.get(target, {}).get(relation)
        return members if members else None

    def union_gold_size(self, target: str) -> int:
        # Pruned sets are pairwise disjoint, so the union size is the sum.
        return sum(len(m) for m in self.relatum_sets.get(target, {}).values())


def _restrict(prompt_ids: dict[str, str], prompts: Iterable[str] | None) -> dict[str, str]:
    if prompts is None:
        return prompt_ids
    keep = set(prompts)
    return {p: pid for p, pid in prompt_ids.items() if p in keep}


# ---------------------------------------------------------------------------
# Soundness and completeness
# ---------------------------------------------------------------------------

def soundness(
    data: EvalData,
    lists: Mapping[str, RankedList],
    agent: str,
    relation: Relation,
    prompts: Iterable[str] | None = None,
) -> MetricResult:
    """Mean Precision@1 against the relatum set, prompts first, then targets.

    Targets without any answered probe, or without a non-empty relatum set
    for the relation, are excluded and counted.
    """
    result = MetricResult("soundness", relation, agent, None, [])
    per_target: list[PerTargetScore] = []
    skipped = {"no_responses": 0, "no_gold": 0}
    for target in sorted(targets := data.index[relation]):
        gold = data.gold(target, relation)
        if gold is None:
            skipped["no_gold"] += 1
            continue
        scores: list[Fraction] = []
        for prompt_id, pid in sorted(_restrict(targets[target], prompts).items()):
            lst = lists.get(pid)
            if lst is None:
                continue
            hit = ONE if lst.words[0] in gold else ZERO
            scores.append(hit)
            result.outcomes[(target, prompt_id)] = int(hit)
        if not scores:
            skipped["no_responses"] += 1
            continue
        per_target.append(PerTargetScore(target, relation, agent, "soundness", _mean(scores)))
    result.per_target = per_target
    result.skipped = {k: v for k, v in skipped.items() if v}
    if per_target:
        result.value = _mean([s.value for s in per_target])
    return result


def recall_at_cutoff(lst: RankedList, gold: frozenset[str]) -> Fraction:
    """Recall@k with k = min(|gold|, |list|); the cutoff is also the denominator."""
    k = min(len(gold), len(lst))
    hits = sum(1 for w in lst.words[:k] if w in gold)
    return Fraction(hits, k)


def completeness(
    data: EvalData,
    lists: Mapping[str, RankedList],
    agent: str,
    relation: Relation,
    prompts: Iterable[str] | None = None,
) -> MetricResult:
    """Mean Recall@min(|Y|, |L|), averaged over prompts then targets."""
    result = MetricResult("completeness", relation, agent, None, [])
    per_target: list[PerTargetScore] = []
    skipped = {"no_responses": 0, "no_gold": 0}
    for target in sorted(targets := data.index[relation]):
        gold = data.gold(target, relation)
        if gold is None:
            skipped["no_gold"] += 1
            continue
        scores = [
            recall_at_cutoff(lists[pid], gold)
            for _, pid in sorted(_restrict(targets[target], prompts).items())
            if pid in lists
        ]
        if not scores:
            skipped["no_responses"] += 1
            continue
        per_target.append(PerTargetScore(target, relation, agent, "completeness", _mean(scores)))
    result.per_target = per_target
    result.skipped = {k: v for k, v in skipped.items() if v}
    if per_target:
        result.value = _mean([s.value for s in per_target])
    return result


# ---------------------------------------------------------------------------
# Symmetry
# ---------------------------------------------------------------------------

def symmetry(
    data: EvalData,
    lists: Mapping[str, RankedList],
    agent: str,
    relation: Relation,
    k: int,
    prompts: Iterable[str] | None = None,
) -> tuple[MetricResult, list[PerTupleSymmetry]]:
    """Reciprocal-elicitation score for a symmetric relation at cutoff k.

    For a tuple (w, r, v) and prompt p the indicator fires only when v is in
    the top-k of the w-probe and w is in the top-k of the v-probe. Prompts
    with either probe unanswered do not contribute; tuples with no usable
    prompt are skipped and counted.
    """
    if not relation.symmetric:
        raise ValueError(f"symmetry is defined for symmetric relations, not {relation.value}")
    if k < 1:
        raise ValueError("k must be positive")
    result = MetricResult(f"symmetry@{k}", relation, agent, None, [])
    per_tuple: list[PerTupleSymmetry] = []
    skipped = {"missing_probe": 0}
    for t in sorted(t for t in data.tuples if t.relation is relation):
        w_probes = _restrict(data.index[relation].get(t.target, {}), prompts)
        v_probes = _restrict(data.index[relation].get(t.relatum, {}), prompts)
        scores: list[Fraction] = []
        for prompt_id in sorted(set(w_probes) & set(v_probes)):
            lw = lists.get(w_probes[prompt_id])
            lv = lists.get(v_probes[prompt_id])
            if lw is None or lv is None:
                continue
            mu = ONE if t.relatum in lw.top(k) and t.target in lv.top(k) else ZERO
            scores.append(mu)
            result.outcomes[(t.target, t.relatum, prompt_id)] = int(mu)
        if not scores:
            skipped["missing_probe"] += 1
            continue
        per_tuple.append(PerTupleSymmetry(t, agent, k, _mean(scores)))
    result.per_target = [
        PerTargetScore(f"{s.tuple.target}~{s.tuple.relatum}", relation, agent, result.metric, s.value)
        for s in per_tuple
    ]
    result.skipped = {k_: v for k_, v in skipped.items() if v}
    if per_tuple:
        result.value = _mean([s.value for s in per_tuple])
    return result, per_tuple


# ---------------------------------------------------------------------------
# Response entropy and the prototypicality gold subset
# ---------------------------------------------------------------------------

def response_entropy(dist: ResponseDistribution) -> float:
    """Support-normalized Shannon entropy in [0, 1]; singleton support scores 0."""
    n = len(dist.probs)
    if n == 1:
        return 0.0
    denom = math.log2(n)
    return -sum(p * math.log2(p) for p in dist.probs.values()) / denom


def _is_uniform(dist: ResponseDistribution) -> bool:
    if dist.counts is not None:
        return len(set(dist.counts.values())) == 1
    return math.isclose(response_entropy(dist), 1.0, abs_tol=1e-12)


def select_prototypicality_probes(
    data: EvalData,
    human_dists: Mapping[str, ResponseDistribution],
    vocab,
) -> frozenset[str]:
    """Probe ids usable as prototypicality gold.

    Keeps only relations that show a prototypicality effect, drops probes
    whose human response is entropy-maximal (uniform over two or more words),
    and drops probes whose human response uses any out-of-vocabulary word.
    """
    keep: set[str] = set()
    for pid, dist in human_dists.items():
        probe = data.probes.get(pid)
        if probe is None or probe.relation not in PROTOTYPICALITY_RELATIONS:
            continue
        if len(dist.probs) > 1 and _is_uniform(dist):
            continue
        if any(w not in vocab for w in dist.probs):
            continue
        keep.add(pid)
    return frozenset(keep)


# ---------------------------------------------------------------------------
# Prototypicality
# ---------------------------------------------------------------------------

def weighted_edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Edit distance with insertion/deletion weight 1 and substitution weight 2."""
    la, lb = len(a), len(b)
    prev = list(range(lb + 1))
    for i in range(1, la + 1):
        cur = [i] + [0] * lb
        for j in range(1, lb + 1):
            sub = prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 2)
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, sub)
        prev = cur
    return prev[lb]


def edit_similarity(a: Sequence[str], b: Sequence[str], k: int) -> Fraction:
    """1 - distance/(2k); k must bound both sequence lengths."""
    if k < max(len(a), len(b), 1):
        raise ValueError(f"k={k} is too small for sequences of length {len(a)} and {len(b)}")
    return ONE - Fraction(weighted_edit_distance(a, b), 2 * k)


def prototypicality(
    data: EvalData,
    agent_lists: Mapping[str, RankedList],
    human_lists: Mapping[str, RankedList],
    agent: str,
    relation: Relation,
    probe_subset: frozenset[str],
    prompts: Iterable[str] | None = None,
) -> MetricResult:
    """Agreement with the human gold list: top-1 match plus edit similarity.

    The cutoff k is per-probe: the number of words in the human response.
    Probes whose human gold or agent response is missing are skipped and
    counted.
    """
    if relation not in PROTOTYPICALITY_RELATIONS:
        raise ValueError(f"prototypicality is not evaluated for {relation.value}")
    result = MetricResult("prototypicality", relation, agent, None, [])
    per_target: list[PerTargetScore] = []
    skipped = {"no_gold": 0, "no_response": 0}
    for target in sorted(targets := data.index[relation]):
        scores: list[Fraction] = []
        for _, pid in sorted(_restrict(targets[target], prompts).items()):
            if pid not in probe_subset:
                continue
            gold = human_lists.get(pid)
            if gold is None:
                skipped["no_gold"] += 1
                continue
            answer = agent_lists.get(pid)
            if answer is None:
                skipped["no_response"] += 1
                continue
            k = len(gold.words)
            top_match = ONE if answer.words[0] == gold.words[0] else ZERO
            rho = HALF * top_match + HALF * edit_similarity(answer.top(k), gold.top(k), k)
            scores.append(rho)
        if scores:
            per_target.append(PerTargetScore(target, relation, agent, "prototypicality", _mean(scores)))
    result.per_target = per_target
    result.skipped = {k_: v for k_, v in skipped.items() if v}
    if per_target:
        result.value = _mean([s.value for s in per_target])
    return result


# ---------------------------------------------------------------------------
# Distinguishability and AuDC
# ---------------------------------------------------------------------------

def rank_score(word: str, lst: RankedList, k: int) -> Fraction:
    """Normalized relative rank of word within the top k; absence scores 1.

    Absent words take the worst score so that non-retrieval is never cheaper
    than retrieval at the bottom of the window.
    """
    if k < 1:
        raise ValueError("k must be positive")
    for pos, w in enumerate(lst.words[:k], start=1):
        if w == word:
            return Fraction(pos, k)
    return ONE


@dataclass
class DistinguishabilityMatrix:
    """Pairwise relation separation D(r, s) for the 30 ordered pairs.

    A None cell means the pair had no evaluable (target, prompt) context for
    this agent; AuDC treats such cells as zero with a warning.
    """

    agent: str
    cells: dict[tuple[Relation, Relation], Fraction | None]
    #: number of (target, prompt) contexts behind each delta average
    support: dict[tuple[Relation, Relation], int] = field(default_factory=dict)

    def complete(self) -> bool:
        return all(self.cells.get(pair) is not None for pair in ORDERED_PAIRS)


def mean_relative_rank(
    lst: RankedList,
    relata: frozenset[str],
    k: int,
) -> Fraction:
    """delta for one probe: mean rank_score over the given relatum set."""
    return _mean([rank_score(v, lst, k) for v in sorted(relata)])


def distinguishability(
    data: EvalData,
    lists: Mapping[str, RankedList],
    agent: str,
) -> DistinguishabilityMatrix:
    """D(r, s) = max(delta(r, s) - delta(r, r), 0) over all ordered pairs.

    delta(r, s) averages the mean relative rank of s-relata over all answered
    probes of relation r whose target has a non-empty s-relatum set. The
    cutoff k per target is the size of the union of all its pruned relatum
    sets; probes of targets with no relatum sets at all are excluded.
    """
    # (r, s) -> accumulated per-(target, prompt) delta values; s == r included.
    cells: dict[tuple[Relation, Relation], list[Fraction]] = {
        (r, s): [] for r in RELATIONS for s in RELATIONS
    }
    for r in RELATIONS:
        for target in sorted(data.index[r]):
            k = data.union_gold_size(target)
            if k == 0:
                continue
            target_sets = data.relatum_sets.get(target, {})
            for _, pid in sorted(data.index[r][target].items()):
                lst = lists.get(pid)
                if lst is None:
                    continue
                for s in RELATIONS:
                    relata = target_sets.get(s)
                    if relata:
                        cells[(r, s)].append(mean_relative_rank(lst, relata, k))

    deltas: dict[tuple[Relation, Relation], Fraction | None] = {
        pair: (_mean(vals) if vals else None) for pair, vals in cells.items()
    }
    out: dict[tuple[Relation, Relation], Fraction | None] = {}
    support: dict[tuple[Relation, Relation], int] = {}
    for r, s in ORDERED_PAIRS:
        d_rs, d_rr = deltas[(r, s)], deltas[(r, r)]
        if d_rs is None or d_rr is None:
            out[(r, s)] = None
        else:
            out[(r, s)] = max(d_rs - d_rr, ZERO)
        support[(r, s)] = len(cells[(r, s)])
    return DistinguishabilityMatrix(agent, out, support)


def audc(matrix: DistinguishabilityMatrix) -> tuple[list[tuple[Fraction, int]], Fraction]:
    """Step-integrated area under the distinguishability curve.

    Returns the curve sampled at every distinct D value as (threshold,
    pairs-above-threshold) points, plus the exact integral over [0, 1].
    Missing cells count as zero and are warned about.
    """
    values: list[Fraction] = []
    for pair in ORDERED_PAIRS:
        cell = matrix.cells.get(pair)
        if cell is None:
            log.warning("%s: missing distinguishability pair %s->%s counted as 0",
                        matrix.agent, pair[0].value, pair[1].value)
            cell = ZERO
        values.append(cell)

    def eta(p) -> int:
        return sum(1 for d in values if d > p)

    thresholds = sorted(set(values))
    curve = [(p, eta(p)) for p in thresholds]
    grid = sorted({ZERO, ONE, *values})
    area = ZERO
    for lo, hi in zip(grid, grid[1:]):
        area += (hi - lo) * eta(lo)
    return curve, area

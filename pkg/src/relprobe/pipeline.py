"""End-to-end orchestration: build datasets, evaluate agents, run the stats grid.

Every step is deterministic given identical inputs: iteration is over sorted
keys, aggregation is order-independent, and all emitted files are written in
sorted order, so re-running a stage reproduces prior outputs byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import lexicon as lex
from . import probegen, responses, stats
from .config import RunConfig
from .metrics import (
    EvalData,
    audc,
    completeness,
    distinguishability,
    prototypicality,
    response_entropy,
    select_prototypicality_probes,
    soundness,
    symmetry,
)
from .relations import PROTOTYPICALITY_RELATIONS, RELATIONS, SYMMETRIC_RELATIONS, Relation
from .report import (
    AgentEvaluation,
    compare_agents,
    emit_figures,
    per_prompt_breakdown,
    pretraining_comparison,
    size_difference_table,
    write_metric_files,
    write_table_csv,
)
from .responses import AgentId, OorSummary, RankedList, rank, tag_oor

log = logging.getLogger(__name__)


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Build stage
# ---------------------------------------------------------------------------

@dataclass
class BuildResult:
    vocab: lex.Vocabulary
    tuples_raw: set[lex.Tuple]
    tuples: set[lex.Tuple]  # after vocab filter + augmentation
    inventory: dict[Relation, list[str]]
    relatum_sets: dict[str, dict[Relation, frozenset[str]]]
    provenance: dict[str, dict[Relation, dict[str, str]]]
    probes: dict[str, probegen.Probe]
    templates: list[probegen.PromptTemplate]

    def counts(self) -> dict:
        per_rel = lambda ts: {r.value: sum(1 for t in ts if t.relation is r) for r in RELATIONS}
        return {
            "vocab": len(self.vocab),
            "tuples_raw": len(self.tuples_raw),
            "tuples_raw_per_relation": per_rel(self.tuples_raw),
            "tuples_augmented": len(self.tuples),
            "tuples_per_relation": per_rel(self.tuples),
            "targets_per_relation": {r.value: len(ws) for r, ws in self.inventory.items()},
            "probes": len(self.probes),
            "probes_per_relation": {
                r.value: sum(1 for p in self.probes.values() if p.relation is r) for r in RELATIONS
            },
            "relatum_set_mean_size": {
                r.value: _mean_size(self.relatum_sets, r) for r in RELATIONS
            },
        }


def _mean_size(sets: Mapping[str, Mapping[Relation, frozenset[str]]], relation: Relation) -> float | None:
    sizes = [len(m) for by_rel in sets.values() for r, m in by_rel.items() if r is relation]
    return sum(sizes) / len(sizes) if sizes else None


def build_dataset(cfg: RunConfig) -> BuildResult:
    vocab = lex.Vocabulary.intersect([lex.Vocabulary.load(p) for p in cfg.vocab])
    raw: set[lex.Tuple] = set()
    for src in cfg.tuples:
        raw |= lex.ingest_tuples(src.path, src.format)
    filtered = lex.filter_to_vocab(raw, vocab)
    if not filtered:
        raise lex.IngestError("no tuples survive the shared-vocabulary filter")
    augmented = lex.symmetric_augment(filtered)
    graph = lex.LexiconGraph.load(cfg.lexicon_graph)
    relatum_sets, provenance = lex.build_relatum_sets(graph, augmented, vocab)
    inventory = lex.build_target_inventory(augmented, vocab)
    templates = probegen.load_templates(cfg.templates)
    pron = (probegen.PronunciationLexicon.load(cfg.pronunciation)
            if cfg.pronunciation else probegen.PronunciationLexicon.default())
    probes = {p.id: p for p in probegen.generate_probe_set(inventory, templates, pron)}
    return BuildResult(vocab, raw, augmented, inventory, relatum_sets, provenance, probes, templates)


def write_build(build: BuildResult, cfg: RunConfig) -> Path:
    dataset_dir = cfg.output_dir / "dataset"
    dataset_dir.mkdir(parents=True, exist_ok=True)
    lex.write_tuples(build.tuples, dataset_dir / "tuples_augmented.jsonl")
    lex.write_relatum_sets(build.relatum_sets, dataset_dir / "relatum_sets.jsonl")
    probegen.write_probes(build.probes.values(), dataset_dir / "probes.jsonl")
    with open(dataset_dir / "relatum_provenance.jsonl", "w", encoding="utf-8") as fh:
        for target in sorted(build.provenance):
            for relation in RELATIONS:
                if relation in build.provenance[target]:
                    members = build.provenance[target][relation]
                    fh.write(json.dumps({
                        "w": target, "r": relation.value,
                        "members": {w: members[w] for w in sorted(members)},
                    }) + "\n")
    manifest = {
        "config_hash": cfg.config_hash(),
        "input_hashes": {str(p): file_sha256(p) for p in sorted(cfg.input_files())},
        "counts": build.counts(),
    }
    with open(dataset_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return dataset_dir


# ---------------------------------------------------------------------------
# Response loading
# ---------------------------------------------------------------------------

@dataclass
class LoadedAgent:
    agent: AgentId
    lists: dict[str, RankedList]
    dists: dict[str, responses.ResponseDistribution] | None = None  # human pool only


def load_agents(cfg: RunConfig, probes: Mapping[str, probegen.Probe]) -> list[LoadedAgent]:
    loaded: list[LoadedAgent] = []
    if cfg.human_responses is not None:
        key = responses.load_bogus_key(cfg.bogus_key)
        dists = responses.ingest_human(cfg.human_responses, key, known_probes=probes)
        lists = {pid: rank(d) for pid, d in sorted(dists.items())}
        loaded.append(LoadedAgent(AgentId("human", "human-pool"), lists, dists))
    for src in cfg.model_responses:
        dists = responses.ingest_model(src.path, probes=probes, agent_name=src.agent)
        lists = responses.resolve_model_lists(dists, probes, cfg.determiner_alpha, cfg.model_topk)
        agent = AgentId(src.agent, "model", src.family, src.params, src.pretraining)
        loaded.append(LoadedAgent(agent, lists))
    if not loaded:
        raise responses.ResponseError("no agent responses configured")
    return loaded


# ---------------------------------------------------------------------------
# Evaluation stage
# ---------------------------------------------------------------------------

def evaluate_agent(
    data: EvalData,
    loaded: LoadedAgent,
    human: LoadedAgent | None,
    proto_subset: frozenset[str],
    k_values: Sequence[int],
) -> AgentEvaluation:
    agent = loaded.agent.name
    lists = loaded.lists
    sound = {r: soundness(data, lists, agent, r) for r in RELATIONS}
    complete = {r: completeness(data, lists, agent, r) for r in RELATIONS}
    sym: dict[int, dict[Relation, object]] = {}
    sym_tuples: dict[int, dict[Relation, list]] = {}
    for k in k_values:
        sym[k] = {}
        sym_tuples[k] = {}
        for r in SYMMETRIC_RELATIONS:
            res, per_tuple = symmetry(data, lists, agent, r, k)
            sym[k][r] = res
            sym_tuples[k][r] = per_tuple
    proto = {}
    if human is not None:
        for r in PROTOTYPICALITY_RELATIONS:
            proto[r] = prototypicality(data, lists, human.lists, agent, r, proto_subset)
    matrix = distinguishability(data, lists, agent)
    curve, area = audc(matrix)

    oor = OorSummary()
    human_lists = human.lists if human is not None else {}
    for pid in sorted(lists):
        probe = data.probes.get(pid)
        if probe is None:
            continue
        target_sets = data.relatum_sets.get(probe.target, {})
        lst = lists[pid]
        if loaded.agent.kind == "model":
            # models are accounted at the human response length for the probe
            gold = human_lists.get(pid)
            if gold is None:
                continue
            lst = RankedList(lst.probe, lst.agent, lst.words[:len(gold.words)],
                             lst.scores[:len(gold.words)])
        counts = loaded.dists[pid].counts if loaded.dists is not None else None
        oor.add(tag_oor(lst, target_sets), counts)

    return AgentEvaluation(
        agent=loaded.agent,
        soundness=sound,
        completeness=complete,
        symmetry=sym,
        symmetry_tuples=sym_tuples,
        prototypicality=proto,
        matrix=matrix,
        audc_curve=curve,
        audc=area,
        oor=oor,
    )


def _evaluate_task(args) -> AgentEvaluation:
    return evaluate_agent(*args)


def evaluate_all(
    data: EvalData,
    agents: Sequence[LoadedAgent],
    k_values: Sequence[int],
    vocab: lex.Vocabulary,
    workers: int = 1,
) -> tuple[list[AgentEvaluation], frozenset[str], dict[Relation, list[float]]]:
    human = next((a for a in agents if a.agent.kind == "human-pool"), None)
    proto_subset: frozenset[str] = frozenset()
    entropies: dict[Relation, list[float]] = {r: [] for r in RELATIONS}
    if human is not None and human.dists is not None:
        proto_subset = select_prototypicality_probes(data, human.dists, vocab)
        for pid in sorted(human.dists):
            probe = data.probes.get(pid)
            if probe is not None:
                entropies[probe.relation].append(response_entropy(human.dists[pid]))

    tasks = [(data, loaded, human, proto_subset, k_values) for loaded in agents]
    if workers == 1 or len(tasks) <= 1:
        evals = [_evaluate_task(t) for t in tasks]
    else:
        max_workers = workers if workers > 0 else None
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            evals = list(pool.map(_evaluate_task, tasks))
    return evals, proto_subset, entropies


# ---------------------------------------------------------------------------
# Stats grid and report emission
# ---------------------------------------------------------------------------

def _metric_items(ev: AgentEvaluation, symmetry_k: Sequence[int]):
    for r in RELATIONS:
        yield "soundness", r, ev.soundness.get(r)
        yield "completeness", r, ev.completeness.get(r)
    for k in symmetry_k:
        for r in SYMMETRIC_RELATIONS:
            yield f"symmetry@{k}", r, ev.symmetry.get(k, {}).get(r)
    for r in PROTOTYPICALITY_RELATIONS:
        yield "prototypicality", r, ev.prototypicality.get(r)


def pairwise_tests(
    evals: Sequence[AgentEvaluation],
    symmetry_k: Sequence[int],
    alpha: float,
) -> list[dict]:
    """Every agent pair, every metric/relation cell of the test protocol."""
    rows: list[dict] = []
    ordered = sorted(evals, key=lambda e: e.agent.name)
    for i, ev_a in enumerate(ordered):
        for ev_b in ordered[i + 1:]:
            by_b = {(m, r): res for m, r, res in _metric_items(ev_b, symmetry_k)}
            for metric, relation, res_a in _metric_items(ev_a, symmetry_k):
                res_b = by_b.get((metric, relation))
                if res_a is None or res_b is None:
                    continue
                if res_a.value is None or res_b.value is None:
                    continue
                test = compare_agents(res_a, res_b, metric, alpha)
                rows.append({
                    "metric": metric,
                    "relation": relation.value,
                    "agent_a": ev_a.agent.name,
                    "agent_b": ev_b.agent.name,
                    "test": test.test,
                    "statistic": test.statistic,
                    "p": test.p,
                    "significant": test.significant,
                    "degenerate": test.degenerate,
                })
    return rows


def entropy_tests(entropies: Mapping[Relation, Sequence[float]], alpha: float) -> list[dict]:
    """Mann-Whitney U between the entropy samples of every relation pair."""
    rows: list[dict] = []
    for i, r in enumerate(RELATIONS):
        for s in RELATIONS[i + 1:]:
            xs, ys = list(entropies.get(r, ())), list(entropies.get(s, ()))
            if not xs or not ys:
                continue
            test = stats.mann_whitney_u(xs, ys, alpha)
            rows.append({
                "relation_a": r.value, "relation_b": s.value,
                "test": test.test, "statistic": test.statistic,
                "p": test.p, "significant": test.significant,
            })
    return rows


def load_frequencies(path: Path) -> dict[str, float]:
    """Unigram frequency file: whitespace-separated word and count per line."""
    freqs: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) >= 2:
                try:
                    freqs[parts[0].lower()] = float(parts[1])
                except ValueError:
                    continue
    return freqs


def frequency_correlations(
    evals: Sequence[AgentEvaluation],
    data: EvalData,
    freqs: Mapping[str, float],
    symmetry_k: int,
) -> list[dict]:
    """Spearman grid: per (agent, metric, relation, covariate)."""
    rows: list[dict] = []

    def corr(agent: str, metric: str, relation: Relation, covariate: str,
             pairs: list[tuple[float, float]]) -> None:
        if len(pairs) < 3:
            return
        res = stats.spearman([p[0] for p in pairs], [p[1] for p in pairs])
        rows.append({
            "agent": agent, "metric": metric, "relation": relation.value,
            "covariate": covariate, "rho": res.rho, "p": res.p,
            "n": res.n, "degenerate": res.degenerate,
        })

    for ev in sorted(evals, key=lambda e: e.agent.name):
        name = ev.agent.name
        for metric, results in (("soundness", ev.soundness), ("completeness", ev.completeness)):
            for relation in RELATIONS:
                res = results.get(relation)
                if res is None:
                    continue
                target_pairs: list[tuple[float, float]] = []
                mean_pairs: list[tuple[float, float]] = []
                max_pairs: list[tuple[float, float]] = []
                for s in res.per_target:
                    value = float(s.value)
                    if s.target in freqs:
                        target_pairs.append((value, freqs[s.target]))
                    gold = data.gold(s.target, relation) or frozenset()
                    known = [freqs[w] for w in gold if w in freqs]
                    if known:
                        mean_pairs.append((value, sum(known) / len(known)))
                        max_pairs.append((value, max(known)))
                corr(name, metric, relation, "target_freq", target_pairs)
                corr(name, metric, relation, "relatum_mean_freq", mean_pairs)
                corr(name, metric, relation, "relatum_max_freq", max_pairs)
        for relation in SYMMETRIC_RELATIONS:
            per_tuple = ev.symmetry_tuples.get(symmetry_k, {}).get(relation, [])
            mean_pairs = []
            diff_pairs = []
            for s in per_tuple:
                w, v = s.tuple.target, s.tuple.relatum
                if w in freqs and v in freqs:
                    value = float(s.value)
                    mean_pairs.append((value, (freqs[w] + freqs[v]) / 2))
                    diff_pairs.append((value, abs(freqs[w] - freqs[v])))
            corr(name, f"symmetry@{symmetry_k}", relation, "tuple_mean_freq", mean_pairs)
            corr(name, f"symmetry@{symmetry_k}", relation, "tuple_absdiff_freq", diff_pairs)
        for relation in PROTOTYPICALITY_RELATIONS:
            res = ev.prototypicality.get(relation)
            if res is None:
                continue
            target_pairs = [(float(s.value), freqs[s.target])
                            for s in res.per_target if s.target in freqs]
            corr(name, "prototypicality", relation, "target_freq", target_pairs)
    return rows


def _write_csv(path: Path, rows: list[dict], columns: list[str]) -> None:
    import csv

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


class InvariantError(Exception):
    """A computed result violates a stated range or consistency invariant."""


def check_invariants(evals: Sequence[AgentEvaluation]) -> None:
    for ev in evals:
        for metric, relation, res in _metric_items(ev, sorted(ev.symmetry)):
            if res is not None and res.value is not None and not 0 <= res.value <= 1:
                raise InvariantError(
                    f"{ev.agent.name}: {metric}/{relation.value} value {float(res.value)} "
                    f"outside [0, 1]"
                )
        if not 0 <= ev.audc <= 30:
            raise InvariantError(f"{ev.agent.name}: AuDC {float(ev.audc)} outside [0, 30]")


def main_symmetry_k(cfg: RunConfig) -> int:
    # the report-level k; the second configured value (5 under the defaults)
    return cfg.symmetry_k[min(1, len(cfg.symmetry_k) - 1)]


def load_dataset(cfg: RunConfig) -> tuple[EvalData, lex.Vocabulary, dict]:
    """Read the build artifacts back; evaluate and report start from here."""
    dataset_dir = cfg.output_dir / "dataset"
    needed = ["probes.jsonl", "relatum_sets.jsonl", "tuples_augmented.jsonl", "manifest.json"]
    missing = [n for n in needed if not (dataset_dir / n).is_file()]
    if missing:
        raise FileNotFoundError(
            f"build outputs missing from {dataset_dir}: {', '.join(missing)} (run `build` first)"
        )
    probes = probegen.load_probes(dataset_dir / "probes.jsonl")
    relatum_sets = lex.load_relatum_sets(dataset_dir / "relatum_sets.jsonl")
    tuples = lex.ingest_tuples(dataset_dir / "tuples_augmented.jsonl", "native-jsonl")
    vocab = lex.Vocabulary.intersect([lex.Vocabulary.load(p) for p in cfg.vocab])
    manifest = json.loads((dataset_dir / "manifest.json").read_text(encoding="utf-8"))
    return EvalData(probes, relatum_sets, tuples), vocab, manifest


def emit_evaluation(
    cfg: RunConfig,
    data: EvalData,
    agents: Sequence[LoadedAgent],
    evals: Sequence[AgentEvaluation],
    entropies: Mapping[Relation, list[float]],
    proto_subset: frozenset[str],
    dataset_counts: dict,
) -> None:
    """Metric, stats, and OOR outputs plus the run manifest."""
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    alpha = cfg.significance_alpha
    main_k = main_symmetry_k(cfg)

    for ev in evals:
        write_metric_files(outdir, ev)
    stats_dir = outdir / "stats"
    stats_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(stats_dir / "pairwise_tests.csv", pairwise_tests(evals, cfg.symmetry_k, alpha),
               ["metric", "relation", "agent_a", "agent_b", "test", "statistic", "p",
                "significant", "degenerate"])
    _write_csv(stats_dir / "entropy_mwu.csv", entropy_tests(entropies, alpha),
               ["relation_a", "relation_b", "test", "statistic", "p", "significant"])
    if cfg.frequency is not None:
        freqs = load_frequencies(cfg.frequency)
        _write_csv(stats_dir / "frequency_correlations.csv",
                   frequency_correlations(evals, data, freqs, main_k),
                   ["agent", "metric", "relation", "covariate", "rho", "p", "n", "degenerate"])

    # per-prompt heteroscedasticity + best prompts
    hetero_rows: list[dict] = []
    best_rows: list[dict] = []
    loaded_by_name = {a.agent.name: a for a in agents}
    for ev in sorted(evals, key=lambda e: e.agent.name):
        lists = loaded_by_name[ev.agent.name].lists
        for metric in ("soundness", "completeness", f"symmetry@{main_k}"):
            relations = SYMMETRIC_RELATIONS if metric.startswith("symmetry") else RELATIONS
            for relation in relations:
                info = per_prompt_breakdown(data, lists, ev.agent.name, relation, metric,
                                            symmetry_k=main_k, alpha=alpha)
                test = info["levene"]
                hetero_rows.append({
                    "agent": ev.agent.name, "metric": metric, "relation": relation.value,
                    "prompts": len(info["per_prompt"]),
                    "statistic": None if test is None else test.statistic,
                    "p": None if test is None else test.p,
                    "heteroscedastic": None if test is None else test.significant,
                })
                if info["best_prompt"] is not None:
                    best_rows.append({
                        "agent": ev.agent.name, "metric": metric, "relation": relation.value,
                        "best_prompt": info["best_prompt"],
                        "value": info["per_prompt"][info["best_prompt"]],
                    })
    _write_csv(stats_dir / "prompt_heteroscedasticity.csv", hetero_rows,
               ["agent", "metric", "relation", "prompts", "statistic", "p", "heteroscedastic"])
    _write_csv(stats_dir / "best_prompts.csv", best_rows,
               ["agent", "metric", "relation", "best_prompt", "value"])

    with open(outdir / "oor_summary.json", "w", encoding="utf-8") as fh:
        json.dump({ev.agent.name: ev.oor.as_dict() for ev in sorted(evals, key=lambda e: e.agent.name)},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")

    manifest = {
        "config_hash": cfg.config_hash(),
        "input_hashes": {str(p): file_sha256(p) for p in sorted(cfg.input_files())},
        "agents": [
            {"name": a.agent.name, "kind": a.agent.kind, "family": a.agent.family,
             "params": a.agent.params, "pretraining": a.agent.pretraining}
            for a in sorted(agents, key=lambda a: a.agent.name)
        ],
        "counts": dataset_counts,
        "prototypicality_subset": len(proto_subset),
        "symmetry_k": list(cfg.symmetry_k),
        "determiner_alpha": cfg.determiner_alpha,
        "significance_alpha": cfg.significance_alpha,
    }
    with open(outdir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def emit_report(
    cfg: RunConfig,
    evals: Sequence[AgentEvaluation],
    entropies: Mapping[Relation, list[float]],
) -> None:
    """Figure data and the model-size / pretraining comparison tables."""
    outdir = cfg.output_dir
    alpha = cfg.significance_alpha
    main_k = main_symmetry_k(cfg)
    emit_figures(outdir, evals, entropies)

    comparisons = outdir / "reports" / "comparisons"
    comparisons.mkdir(parents=True, exist_ok=True)
    by_family: dict[str, list[AgentEvaluation]] = {}
    for ev in evals:
        if ev.agent.kind == "model" and ev.agent.family:
            by_family.setdefault(ev.agent.family, []).append(ev)
    size_pairs = []
    for family, members in sorted(by_family.items()):
        sized = [e for e in members if e.agent.params is not None]
        if len(sized) >= 2:
            sized.sort(key=lambda e: e.agent.params)
            size_pairs.append((sized[0], sized[-1], family))
    if size_pairs:
        for metric, table in size_difference_table(size_pairs, main_k, alpha).items():
            write_table_csv(comparisons / f"size_diff__{metric.replace('@', '_k')}.csv", table)
    mlms = [e for e in evals if e.agent.pretraining == "mlm"]
    clms = [e for e in evals if e.agent.pretraining == "clm"]
    if mlms and clms:
        best_tables, count_grid, audc_info = pretraining_comparison(mlms, clms, main_k, alpha)
        for metric, table in best_tables.items():
            write_table_csv(comparisons / f"pretrain_best__{metric.replace('@', '_k')}.csv", table)
        write_table_csv(comparisons / "pretrain_significant_pairs.csv", count_grid)
        with open(comparisons / "pretrain_audc.json", "w", encoding="utf-8") as fh:
            json.dump(audc_info, fh, indent=2, sort_keys=True)
            fh.write("\n")

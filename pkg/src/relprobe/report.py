"""Publication-style outputs assembled from persisted per-target scores.

Nothing in this module computes a metric from scratch: every table cell is
derived from the per-target/per-tuple breakdowns produced by the metrics
module, so any reported number can be re-derived from the persisted score
files. Significance tiers are emitted as explicit pairwise p-values.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .metrics import (
    DistinguishabilityMatrix,
    EvalData,
    MetricResult,
    PerTupleSymmetry,
    completeness,
    soundness,
    symmetry,
)
from .relations import PROTOTYPICALITY_RELATIONS, RELATIONS, SYMMETRIC_RELATIONS, Relation
from .responses import AgentId, OorSummary, RankedList
from .stats import DEFAULT_ALPHA, TestResult, levene, mcnemar, wilcoxon_signed_rank

log = logging.getLogger(__name__)

MICRO = "micro"
MACRO = "macro"


def fnum(x) -> float | None:
    return None if x is None else float(x)


@dataclass
class AgentEvaluation:
    """Everything computed for one agent, ready for tables and tests."""

    agent: AgentId
    soundness: dict[Relation, MetricResult]
    completeness: dict[Relation, MetricResult]
    symmetry: dict[int, dict[Relation, MetricResult]]
    symmetry_tuples: dict[int, dict[Relation, list[PerTupleSymmetry]]]
    prototypicality: dict[Relation, MetricResult]
    matrix: DistinguishabilityMatrix
    audc_curve: list[tuple[Fraction, int]]
    audc: Fraction
    oor: OorSummary

    def results_for(self, metric: str) -> dict[Relation, MetricResult]:
        if metric == "soundness":
            return self.soundness
        if metric == "completeness":
            return self.completeness
        if metric == "prototypicality":
            return self.prototypicality
        if metric.startswith("symmetry@"):
            return self.symmetry[int(metric.split("@")[1])]
        raise KeyError(metric)


@dataclass(frozen=True)
class TableCell:
    value: float | None
    p: float | None = None
    significant: bool | None = None
    note: str = ""


@dataclass
class ComparisonTable:
    metric: str
    averaging: str  # micro | macro | per-relation | n.a.
    rows: dict[str, dict[str, TableCell]] = field(default_factory=dict)

    def set(self, row: str, column: str, cell: TableCell) -> None:
        self.rows.setdefault(row, {})[column] = cell


# ---------------------------------------------------------------------------
# Aggregation helpers
# ---------------------------------------------------------------------------

def micro_average(results: Mapping[Relation, MetricResult]) -> Fraction | None:
    scores = [s.value for res in results.values() for s in res.per_target]
    return sum(scores, Fraction(0)) / len(scores) if scores else None


def macro_average(results: Mapping[Relation, MetricResult]) -> Fraction | None:
    values = [res.value for res in results.values() if res.value is not None]
    return sum(values, Fraction(0)) / len(values) if values else None


def _paired_target_values(a: MetricResult, b: MetricResult) -> tuple[list[float], list[float]]:
    av, bv = a.target_values(), b.target_values()
    shared = sorted(set(av) & set(bv))
    return [float(av[t]) for t in shared], [float(bv[t]) for t in shared]


def _paired_outcomes(a: MetricResult, b: MetricResult) -> tuple[list[int], list[int]]:
    shared = sorted(set(a.outcomes) & set(b.outcomes))
    return [a.outcomes[key] for key in shared], [b.outcomes[key] for key in shared]


def compare_agents(
    a: MetricResult,
    b: MetricResult,
    metric: str,
    alpha: float = DEFAULT_ALPHA,
) -> TestResult:
    """The comparison test for one metric cell: McNemar on the binary
    metrics (soundness, symmetry), Wilcoxon on the graded ones."""
    if metric == "soundness" or metric.startswith("symmetry"):
        xs, ys = _paired_outcomes(a, b)
        return mcnemar(xs, ys, alpha)
    xs, ys = _paired_target_values(a, b)
    if not xs:
        return TestResult("wilcoxon-exact", 0.0, 1.0, alpha, (0, 0), degenerate=True)
    return wilcoxon_signed_rank(xs, ys, alpha)


def pooled_compare(
    a: Mapping[Relation, MetricResult],
    b: Mapping[Relation, MetricResult],
    metric: str,
    alpha: float = DEFAULT_ALPHA,
) -> TestResult:
    """Same test, with per-relation series pooled (for micro-level deltas)."""
    if metric == "soundness" or metric.startswith("symmetry"):
        xs: list[int] = []
        ys: list[int] = []
        for relation in RELATIONS:
            if relation in a and relation in b:
                x1, y1 = _paired_outcomes(a[relation], b[relation])
                xs.extend(x1)
                ys.extend(y1)
        return mcnemar(xs, ys, alpha)
    xs2: list[float] = []
    ys2: list[float] = []
    for relation in RELATIONS:
        if relation in a and relation in b:
            x1, y1 = _paired_target_values(a[relation], b[relation])
            xs2.extend(x1)
            ys2.extend(y1)
    if not xs2:
        return TestResult("wilcoxon-exact", 0.0, 1.0, alpha, (0, 0), degenerate=True)
    return wilcoxon_signed_rank(xs2, ys2, alpha)


_TABLE_METRICS = ("soundness", "completeness", "symmetry@{k}", "prototypicality")


def _metric_names(symmetry_k: int) -> list[str]:
    return [m.format(k=symmetry_k) for m in _TABLE_METRICS]


# ---------------------------------------------------------------------------
# Model-size differences
# ---------------------------------------------------------------------------

def size_difference_table(
    pairs: Sequence[tuple[AgentEvaluation, AgentEvaluation, str]],
    symmetry_k: int = 5,
    alpha: float = DEFAULT_ALPHA,
) -> dict[str, ComparisonTable]:
    """Large-minus-small deltas per metric for within-family pairs.

    Each pair is (small, large, family label); the two agents must have been
    evaluated on identical probe sets. Produces one per-relation table per
    metric plus micro/macro summary rows; the AuDC delta is numeric only.
    """
    tables: dict[str, ComparisonTable] = {}
    for small, large, family in pairs:
        _check_paired(small, large)
        for metric in _metric_names(symmetry_k):
            s_res, l_res = small.results_for(metric), large.results_for(metric)
            table = tables.setdefault(metric, ComparisonTable(metric, "per-relation"))
            for relation in sorted(set(s_res) & set(l_res), key=RELATIONS.index):
                sv, lv = s_res[relation].value, l_res[relation].value
                if sv is None or lv is None:
                    continue
                test = compare_agents(l_res[relation], s_res[relation], metric, alpha)
                table.set(relation.value, family,
                          TableCell(float(lv - sv), test.p, test.significant))
            s_micro, l_micro = micro_average(s_res), micro_average(l_res)
            if s_micro is not None and l_micro is not None:
                pooled = pooled_compare(l_res, s_res, metric, alpha)
                table.set(MICRO, family,
                          TableCell(float(l_micro - s_micro), pooled.p, pooled.significant))
            s_macro, l_macro = macro_average(s_res), macro_average(l_res)
            if s_macro is not None and l_macro is not None:
                table.set(MACRO, family, TableCell(float(l_macro - s_macro)))
        audc_table = tables.setdefault("audc", ComparisonTable("audc", "n.a."))
        audc_table.set("ALL", family,
                       TableCell(float(large.audc - small.audc), note="no known test"))
    return tables


def _check_paired(a: AgentEvaluation, b: AgentEvaluation) -> None:
    for relation in RELATIONS:
        ka = {s.target for s in a.soundness[relation].per_target} if relation in a.soundness else set()
        kb = {s.target for s in b.soundness[relation].per_target} if relation in b.soundness else set()
        if ka != kb:
            raise ValueError(
                f"agents {a.agent.name} and {b.agent.name} were not evaluated on "
                f"identical probe sets ({relation.value})"
            )


# ---------------------------------------------------------------------------
# Pretraining-task comparison
# ---------------------------------------------------------------------------

def pretraining_comparison(
    mlms: Sequence[AgentEvaluation],
    clms: Sequence[AgentEvaluation],
    symmetry_k: int = 5,
    alpha: float = DEFAULT_ALPHA,
) -> tuple[dict[str, ComparisonTable], ComparisonTable, dict]:
    """Best-CLM-minus-best-MLM deltas and the significant-pair count grid."""
    if not mlms or not clms:
        raise ValueError("need at least one agent of each pretraining kind")

    best_tables: dict[str, ComparisonTable] = {}
    counts = ComparisonTable("significant-mlm-wins", "per-relation")
    for metric in _metric_names(symmetry_k):
        table = best_tables.setdefault(metric, ComparisonTable(metric, "per-relation"))
        relations: Iterable[Relation]
        if metric.startswith("symmetry"):
            relations = SYMMETRIC_RELATIONS
        elif metric == "prototypicality":
            relations = PROTOTYPICALITY_RELATIONS
        else:
            relations = RELATIONS
        for relation in relations:
            def best(evals: Sequence[AgentEvaluation]) -> AgentEvaluation | None:
                scored = [e for e in evals
                          if relation in e.results_for(metric)
                          and e.results_for(metric)[relation].value is not None]
                return max(scored, key=lambda e: e.results_for(metric)[relation].value) if scored else None

            best_mlm, best_clm = best(mlms), best(clms)
            if best_mlm is None or best_clm is None:
                continue
            m_res = best_mlm.results_for(metric)[relation]
            c_res = best_clm.results_for(metric)[relation]
            test = compare_agents(c_res, m_res, metric, alpha)
            table.set(relation.value, "best-clm-minus-best-mlm",
                      TableCell(float(c_res.value - m_res.value), test.p, test.significant,
                                note=f"{best_clm.agent.name}-{best_mlm.agent.name}"))

            wins = 0
            for m in mlms:
                for c in clms:
                    mr = m.results_for(metric).get(relation)
                    cr = c.results_for(metric).get(relation)
                    if mr is None or cr is None or mr.value is None or cr.value is None:
                        continue
                    t = compare_agents(mr, cr, metric, alpha)
                    if t.significant and mr.value > cr.value:
                        wins += 1
            counts.set(relation.value, metric,
                       TableCell(wins, note=f"of {len(mlms) * len(clms)} pairs"))

    # AuDC has no significance test; compare best numeric values directly.
    best_mlm_audc = max(mlms, key=lambda e: e.audc)
    best_clm_audc = max(clms, key=lambda e: e.audc)
    audc_info = {
        "best_mlm": best_mlm_audc.agent.name,
        "best_clm": best_clm_audc.agent.name,
        "delta": float(best_clm_audc.audc - best_mlm_audc.audc),
        "mlm_beats_clm_pairs": sum(
            1 for m in mlms for c in clms if m.audc > c.audc
        ),
        "pairs": len(mlms) * len(clms),
    }
    return best_tables, counts, audc_info


# ---------------------------------------------------------------------------
# Per-prompt breakdown and heteroscedasticity
# ---------------------------------------------------------------------------

def per_prompt_breakdown(
    data: EvalData,
    lists: Mapping[str, RankedList],
    agent: str,
    relation: Relation,
    metric: str,
    symmetry_k: int = 5,
    alpha: float = DEFAULT_ALPHA,
) -> dict:
    """Metric values as if each prompt were the only one in the set.

    Returns the per-prompt summary values, the best prompt, and Levene's test
    over the per-prompt score groups (when at least two prompts have two or
    more scores each).
    """
    def run(prompt: str | None) -> MetricResult:
        restriction = None if prompt is None else [prompt]
        if metric == "soundness":
            return soundness(data, lists, agent, relation, prompts=restriction)
        if metric == "completeness":
            return completeness(data, lists, agent, relation, prompts=restriction)
        if metric.startswith("symmetry"):
            return symmetry(data, lists, agent, relation, symmetry_k, prompts=restriction)[0]
        raise ValueError(f"per-prompt breakdown does not support {metric!r}")

    per_prompt: dict[str, float] = {}
    groups: list[list[float]] = []
    for prompt in data.prompts(relation):
        res = run(prompt)
        if res.value is None:
            continue
        per_prompt[prompt] = float(res.value)
        groups.append([float(s.value) for s in res.per_target])
    best = max(per_prompt, key=lambda p: (per_prompt[p], p)) if per_prompt else None
    test: TestResult | None = None
    usable = [g for g in groups if len(g) >= 2]
    if len(usable) >= 2:
        test = levene(usable, alpha)
    return {
        "agent": agent,
        "relation": relation.value,
        "metric": metric,
        "per_prompt": per_prompt,
        "best_prompt": best,
        "pooled": fnum(run(None).value),
        "levene": test,
    }


# ---------------------------------------------------------------------------
# File emission
# ---------------------------------------------------------------------------

def write_metric_files(outdir: Path, ev: AgentEvaluation) -> None:
    """Per-(agent, relation, metric) CSV + JSONL: per-target rows then a summary row."""
    metric_results: list[tuple[str, Relation, MetricResult]] = []
    for relation, res in sorted(ev.soundness.items(), key=lambda kv: RELATIONS.index(kv[0])):
        metric_results.append(("soundness", relation, res))
    for relation, res in sorted(ev.completeness.items(), key=lambda kv: RELATIONS.index(kv[0])):
        metric_results.append(("completeness", relation, res))
    for k, by_rel in sorted(ev.symmetry.items()):
        for relation, res in sorted(by_rel.items(), key=lambda kv: RELATIONS.index(kv[0])):
            metric_results.append((f"symmetry@{k}", relation, res))
    for relation, res in sorted(ev.prototypicality.items(), key=lambda kv: RELATIONS.index(kv[0])):
        metric_results.append(("prototypicality", relation, res))

    for metric, relation, res in metric_results:
        base = outdir / "reports" / metric.replace("@", "_k")
        base.mkdir(parents=True, exist_ok=True)
        stem = f"{ev.agent.name}__{relation.value}"
        with open(base / f"{stem}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "target", "value"])
            for s in sorted(res.per_target, key=lambda s: s.target):
                writer.writerow(["target", s.target, repr(float(s.value))])
            writer.writerow(["summary", "", "" if res.value is None else repr(float(res.value))])
        with open(base / f"{stem}.jsonl", "w", encoding="utf-8") as fh:
            for s in sorted(res.per_target, key=lambda s: s.target):
                fh.write(json.dumps({
                    "agent": ev.agent.name, "metric": metric, "relation": relation.value,
                    "target": s.target, "value": float(s.value),
                }) + "\n")
            fh.write(json.dumps({
                "agent": ev.agent.name, "metric": metric, "relation": relation.value,
                "summary": True, "value": fnum(res.value), "skipped": res.skipped,
            }) + "\n")


def write_matrix_csv(path: Path, matrix: DistinguishabilityMatrix) -> None:
    """6x6 distinguishability grid with an empty diagonal."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + [r.value for r in RELATIONS])
        for r in RELATIONS:
            row: list[str] = [r.value]
            for s in RELATIONS:
                if r is s:
                    row.append("")
                else:
                    cell = matrix.cells.get((r, s))
                    row.append("" if cell is None else repr(float(cell)))
            writer.writerow(row)


def write_curve_csv(path: Path, curve: Sequence[tuple[Fraction, int]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "eta"])
        for p, eta in curve:
            writer.writerow([repr(float(p)), eta])


def write_table_csv(path: Path, table: ComparisonTable) -> None:
    columns = sorted({c for cells in table.rows.values() for c in cells})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "averaging", "row"]
                        + [f"{c}:{fld}" for c in columns for fld in ("value", "p", "significant")])
        for row_key in sorted(table.rows):
            out = [table.metric, table.averaging, row_key]
            for c in columns:
                cell = table.rows[row_key].get(c)
                if cell is None:
                    out += ["", "", ""]
                else:
                    out += [
                        "" if cell.value is None else repr(float(cell.value)),
                        "" if cell.p is None else repr(float(cell.p)),
                        "" if cell.significant is None else str(cell.significant).lower(),
                    ]
            writer.writerow(out)


def emit_figures(
    outdir: Path,
    evals: Sequence[AgentEvaluation],
    entropies: Mapping[Relation, Sequence[float]] | None = None,
) -> list[Path]:
    """Plot-data CSVs: metric bars, AuDC curves, matrices, entropy boxes."""
    figures = outdir / "figures"
    figures.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    bars = figures / "metric_bars.csv"
    with open(bars, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "relation", "agent", "value"])
        for ev in sorted(evals, key=lambda e: e.agent.name):
            for metric in ("soundness", "completeness", "prototypicality"):
                for relation, res in sorted(ev.results_for(metric).items(),
                                            key=lambda kv: RELATIONS.index(kv[0])):
                    if res.value is not None:
                        writer.writerow([metric, relation.value, ev.agent.name, repr(float(res.value))])
            for k, by_rel in sorted(ev.symmetry.items()):
                for relation, res in sorted(by_rel.items(), key=lambda kv: RELATIONS.index(kv[0])):
                    if res.value is not None:
                        writer.writerow([f"symmetry@{k}", relation.value, ev.agent.name,
                                         repr(float(res.value))])
    written.append(bars)

    audc_csv = figures / "audc.csv"
    with open(audc_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent", "audc"])
        for ev in sorted(evals, key=lambda e: e.agent.name):
            writer.writerow([ev.agent.name, repr(float(ev.audc))])
    written.append(audc_csv)

    for ev in sorted(evals, key=lambda e: e.agent.name):
        curve_path = figures / f"curve__{ev.agent.name}.csv"
        write_curve_csv(curve_path, ev.audc_curve)
        written.append(curve_path)
        matrix_path = figures / f"matrix__{ev.agent.name}.csv"
        write_matrix_csv(matrix_path, ev.matrix)
        written.append(matrix_path)

    if entropies is not None:
        box = figures / "entropy_box.csv"
        with open(box, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["relation", "entropy"])
            for relation in RELATIONS:
                for value in sorted(entropies.get(relation, ())):
                    writer.writerow([relation.value, repr(float(value))])
        written.append(box)
    return written

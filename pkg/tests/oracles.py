"""Independent brute-force reimplementations used to cross-check the package.

Everything here is written from the definitions, over plain dicts, lists,
and Fractions, taking deliberately different computational routes from the
package (fixpoint closure instead of one-pass augmentation, LCS identity
instead of the edit-distance DP, pair summation instead of step integration,
full sign enumeration instead of convolution, and so on). Exclusion rules
(unanswered probes, empty gold sets) mirror the documented contracts.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from itertools import product

from scipy import stats as sps

REL = ("HYP", "HPO", "HOL", "MER", "ANT", "SYN")
REVERSE = {"HYP": "HPO", "HPO": "HYP", "HOL": "MER", "MER": "HOL", "ANT": "ANT", "SYN": "SYN"}

F = Fraction


def mean(vals):
    vals = list(vals)
    return sum(vals, F(0)) / len(vals)


# --- tuple augmentation ------------------------------------------------------

def augment_closure(tuples):
    """Fixpoint closure of a set of (w, r, v) under symmetry/reverse."""
    out = set(tuples)
    while True:
        extra = {(v, REVERSE[r], w) for (w, r, v) in out} - out
        if not extra:
            return out
        out |= extra


# --- graph expansion ---------------------------------------------------------

def parse_graph(path):
    """Adjacency (sense -> relation -> set of senses) with implied reverse edges."""
    adj: dict[str, dict[str, set[str]]] = {}
    senses_of: dict[str, list[str]] = {}

    def note(sense):
        word = sense.rsplit("/", 1)[0]
        senses_of.setdefault(word, [])
        if sense not in senses_of[word]:
            senses_of[word].append(sense)
        adj.setdefault(sense, {r: set() for r in REL})

    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            note(rec["sense"])
            for rel, other in rec.get("edges", ()):
                note(other)
                adj[rec["sense"]][rel].add(other)
                adj[other][REVERSE[rel]].add(rec["sense"])
    return adj, senses_of


def expand(adj, senses_of, target, relation, vocab):
    """All relata reachable by 1 edge (plus 2 same-label edges for HYP/HPO)."""
    found = set()
    for sense in senses_of.get(target, ()):
        for mid in adj[sense][relation]:
            found.add(mid.rsplit("/", 1)[0])
            if relation in ("HYP", "HPO"):
                for far in adj[mid][relation]:
                    found.add(far.rsplit("/", 1)[0])
    return {w for w in found if w in vocab and w != target}


def prune(sets_by_relation):
    """Remove words present in two or more of one target's relation sets."""
    from collections import Counter

    counts = Counter(w for members in sets_by_relation.values() for w in members)
    return {r: {w for w in members if counts[w] == 1}
            for r, members in sets_by_relation.items()}


# --- ranked-list metrics -----------------------------------------------------

def rank_words(probs):
    """Descending probability, lexicographic tie-break."""
    return [w for w, _ in sorted(probs.items(), key=lambda it: (-it[1], it[0]))]


def precision_at_1(words, gold):
    return F(1) if words[0] in gold else F(0)


def recall_min_cutoff(words, gold):
    k = min(len(gold), len(words))
    return F(sum(1 for w in words[:k] if w in gold), k)


def soundness(probes, lists, gold, relation):
    """probes: (pid, target, relation, prompt); lists: pid -> word list."""
    per_target = {}
    for target in sorted({t for (_, t, r, _) in probes if r == relation}):
        y = gold.get((target, relation))
        if not y:
            continue
        pids = sorted((prompt, pid) for (pid, t, r, prompt) in probes
                      if r == relation and t == target)
        scores = [precision_at_1(lists[pid], y) for _, pid in pids if pid in lists]
        if scores:
            per_target[target] = mean(scores)
    return (mean(per_target.values()) if per_target else None), per_target


def completeness(probes, lists, gold, relation):
    per_target = {}
    for target in sorted({t for (_, t, r, _) in probes if r == relation}):
        y = gold.get((target, relation))
        if not y:
            continue
        pids = sorted((prompt, pid) for (pid, t, r, prompt) in probes
                      if r == relation and t == target)
        scores = [recall_min_cutoff(lists[pid], y) for _, pid in pids if pid in lists]
        if scores:
            per_target[target] = mean(scores)
    return (mean(per_target.values()) if per_target else None), per_target


def symmetry(probes, lists, tuples, relation, k):
    probe_of = {(t, r, prompt): pid for (pid, t, r, prompt) in probes}
    prompts = sorted({prompt for (_, _, r, prompt) in probes if r == relation})
    per_tuple = {}
    for (w, r, v) in sorted(tuples):
        if r != relation:
            continue
        scores = []
        for prompt in prompts:
            pw, pv = probe_of.get((w, r, prompt)), probe_of.get((v, r, prompt))
            if pw is None or pv is None or pw not in lists or pv not in lists:
                continue
            hit = v in lists[pw][:k] and w in lists[pv][:k]
            scores.append(F(1) if hit else F(0))
        if scores:
            per_tuple[(w, v)] = mean(scores)
    return (mean(per_tuple.values()) if per_tuple else None), per_tuple


def entropy(probs):
    if len(probs) == 1:
        return 0.0
    n = len(probs)
    return -sum(p * math.log2(p) for _, p in sorted(probs.items())) / math.log2(n)


def lcs_len(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def edit_similarity(a, b, k):
    """Via the LCS identity: with substitution weight 2 the optimal edit
    script never substitutes, so distance = |a| + |b| - 2 * LCS(a, b)."""
    distance = len(a) + len(b) - 2 * lcs_len(a, b)
    return 1 - F(distance, 2 * k)


def proto_subset(probes, human_probs, human_counts, vocab, relations=("HYP", "HOL", "ANT", "SYN")):
    keep = set()
    rel_of = {pid: r for (pid, _, r, _) in probes}
    for pid, probs in human_probs.items():
        if rel_of.get(pid) not in relations:
            continue
        counts = human_counts[pid]
        if len(probs) > 1 and len(set(counts.values())) == 1:
            continue
        if any(w not in vocab for w in probs):
            continue
        keep.add(pid)
    return keep


def prototypicality(probes, agent_lists, human_lists, relation, subset):
    per_target = {}
    for target in sorted({t for (_, t, r, _) in probes if r == relation}):
        pids = sorted((prompt, pid) for (pid, t, r, prompt) in probes
                      if r == relation and t == target and pid in subset)
        scores = []
        for _, pid in pids:
            if pid not in human_lists or pid not in agent_lists:
                continue
            gold = human_lists[pid]
            k = len(gold)
            answer = agent_lists[pid][:k]
            top = F(1) if answer[0] == gold[0] else F(0)
            scores.append(F(1, 2) * top + F(1, 2) * edit_similarity(answer, gold[:k], k))
        if scores:
            per_target[target] = mean(scores)
    return (mean(per_target.values()) if per_target else None), per_target


def rank_score(word, words, k):
    top = words[:k]
    return F(top.index(word) + 1, k) if word in top else F(1)


def distinguishability(probes, lists, gold_by_target):
    """gold_by_target: target -> relation -> set (pruned)."""
    deltas = {}
    for r in REL:
        for s in REL:
            cells = []
            for (pid, target, rel, _prompt) in sorted(probes):
                if rel != r or pid not in lists:
                    continue
                sets = gold_by_target.get(target, {})
                k = sum(len(m) for m in sets.values())
                if k == 0:
                    continue
                relata = sets.get(s)
                if relata:
                    cells.append(mean(rank_score(v, lists[pid], k) for v in sorted(relata)))
            deltas[(r, s)] = mean(cells) if cells else None
    matrix = {}
    for r in REL:
        for s in REL:
            if r == s:
                continue
            d_rs, d_rr = deltas[(r, s)], deltas[(r, r)]
            matrix[(r, s)] = None if d_rs is None or d_rr is None else max(d_rs - d_rr, F(0))
    return matrix


def audc_pair_sum(matrix):
    """The closed form: the integral of the pair-count curve is the sum of D values."""
    return sum((d if d is not None else F(0) for d in matrix.values()), F(0))


def audc_numeric(matrix, steps=200001):
    """Riemann-style numeric check of the step integral, in floats."""
    ds = [float(d) if d is not None else 0.0 for d in matrix.values()]
    total = 0.0
    width = 1.0 / (steps - 1)
    for i in range(steps - 1):
        p = (i + 0.5) * width  # midpoint; eta is a step function
        total += sum(1 for d in ds if d > p) * width
    return total


# --- statistics --------------------------------------------------------------

def mcnemar_exact_p(b, c):
    n = b + c
    return min(1.0, 2 * float(sps.binom.cdf(min(b, c), n, 0.5)))


def chi2_1df_sf(x):
    """Survival function of chi-square with one degree of freedom."""
    return math.erfc(math.sqrt(x / 2))


def wilcoxon_enumerate(diffs):
    """Exact two-sided p by enumerating all 2^n sign assignments."""
    diffs = [d for d in diffs if d != 0]
    n = len(diffs)
    ranks = sps.rankdata([abs(d) for d in diffs])
    w_obs = sum(r for d, r in zip(diffs, ranks) if d > 0)
    lower = upper = 0
    for signs in product((0, 1), repeat=n):
        w = sum(r for s, r in zip(signs, ranks) if s)
        lower += w <= w_obs + 1e-12
        upper += w >= w_obs - 1e-12
    total = 2 ** n
    return w_obs, min(1.0, 2 * min(lower / total, upper / total))


def mwu_closed_form(xs, ys):
    """U by direct pairwise counting; p by the tie-corrected normal formula."""
    n1, n2 = len(xs), len(ys)
    u = sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in xs for y in ys)
    pooled = list(xs) + list(ys)
    ties = {}
    for v in pooled:
        ties[v] = ties.get(v, 0) + 1
    n = n1 + n2
    tie_term = sum(t ** 3 - t for t in ties.values()) / (n * (n - 1))
    var = n1 * n2 / 12 * ((n + 1) - tie_term)
    mu = n1 * n2 / 2
    if var == 0:
        return u, 1.0
    z = (abs(u - mu) - 0.5) / math.sqrt(var)
    p = math.erfc(max(z, 0.0) / math.sqrt(2))
    return u, min(1.0, p)


def levene_direct(groups):
    """One-way ANOVA on absolute deviations from group means."""
    z = [[abs(x - sum(g) / len(g)) for x in g] for g in groups]
    k = len(groups)
    n = sum(len(g) for g in groups)
    zbar = sum(sum(g) for g in z) / n
    zbars = [sum(g) / len(g) for g in z]
    num = (n - k) * sum(len(g) * (zb - zbar) ** 2 for g, zb in zip(z, zbars))
    den = (k - 1) * sum((x - zb) ** 2 for g, zb in zip(z, zbars) for x in g)
    if den == 0:
        return None, None
    w = num / den
    return w, float(sps.f.sf(w, k - 1, n - k))


def midranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for idx in order[i:j + 1]:
            ranks[idx] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman_closed_form(xs, ys):
    """Pearson on midranks; p from the t approximation."""
    rx, ry = midranks(list(xs)), midranks(list(ys))
    n = len(rx)
    mx, my = sum(rx) / n, sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0 or vy == 0:
        return None, None
    rho = cov / math.sqrt(vx * vy)
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1 - rho ** 2))
    return rho, float(2 * sps.t.sf(abs(t), n - 2))

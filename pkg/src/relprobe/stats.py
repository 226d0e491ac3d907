"""Nonparametric tests and correlations behind the comparison protocol.

Variant choices are pinned here because they change p-values: McNemar uses
the exact binomial on discordant pairs below 25 and the continuity-corrected
chi-square above; the Wilcoxon signed-rank test enumerates the exact midrank
null below n=26 and switches to the tie-corrected normal approximation above;
all alternatives are two-sided.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import stats as sps

DEFAULT_ALPHA = 0.05

#: discordant-pair count at which McNemar switches from exact to chi-square
MCNEMAR_EXACT_MAX = 25
#: largest n for which Wilcoxon uses exact enumeration
WILCOXON_EXACT_MAX = 25


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this as a test class

    test: str
    statistic: float
    p: float
    alpha: float
    n: tuple[int, ...]
    degenerate: bool = False

    def __post_init__(self):
        if not (0 <= self.p <= 1):
            raise ValueError(f"p-value out of range: {self.p}")

    @property
    def significant(self) -> bool:
        return self.p < self.alpha


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p: float
    n: int
    degenerate: bool = False


# ---------------------------------------------------------------------------
# McNemar
# ---------------------------------------------------------------------------

def mcnemar_chi2(b: int, c: int) -> float:
    """Continuity-corrected McNemar statistic (|b-c|-1)^2 / (b+c)."""
    if b + c == 0:
        raise ValueError("no discordant pairs")
    return (abs(b - c) - 1) ** 2 / (b + c)


def mcnemar(xs: Sequence[int], ys: Sequence[int], alpha: float = DEFAULT_ALPHA) -> TestResult:
    """Paired binary outcomes of two agents on identical items."""
    if len(xs) != len(ys):
        raise ValueError(f"outcome vectors are not aligned: {len(xs)} vs {len(ys)}")
    b = sum(1 for x, y in zip(xs, ys) if x and not y)
    c = sum(1 for x, y in zip(xs, ys) if not x and y)
    n = b + c
    if n == 0:
        return TestResult("mcnemar-exact", 0.0, 1.0, alpha, (len(xs), b, c), degenerate=True)
    if n < MCNEMAR_EXACT_MAX:
        m = min(b, c)
        tail = sum(math.comb(n, i) for i in range(m + 1)) / 2 ** n
        p = min(1.0, 2 * tail)
        return TestResult("mcnemar-exact", float(m), p, alpha, (len(xs), b, c))
    stat = mcnemar_chi2(b, c)
    p = float(sps.chi2.sf(stat, df=1))
    return TestResult("mcnemar-chi2", stat, p, alpha, (len(xs), b, c))


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank
# ---------------------------------------------------------------------------

def _signed_midranks(diffs: Sequence[float]) -> tuple[list[Fraction], Fraction]:
    """Midranks of |d| (as exact fractions) and the positive-rank sum W+."""
    order = sorted(range(len(diffs)), key=lambda i: abs(diffs[i]))
    ranks: list[Fraction] = [Fraction(0)] * len(diffs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and abs(diffs[order[j + 1]]) == abs(diffs[order[i]]):
            j += 1
        mid = Fraction(i + 1 + j + 1, 2)
        for idx in order[i:j + 1]:
            ranks[idx] = mid
        i = j + 1
    w_plus = sum((r for d, r in zip(diffs, ranks) if d > 0), Fraction(0))
    return ranks, w_plus


def _wilcoxon_exact_p(ranks: Sequence[Fraction], w_plus: Fraction) -> float:
    """Two-sided exact p over all 2^n sign assignments, via convolution.

    Doubling every rank makes all achievable W+ values integers, so the null
    distribution is a dense integer convolution rather than a 2^n walk.
    """
    doubled = [int(2 * r) for r in ranks]
    total = sum(doubled)
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for d in doubled:
        shifted = np.zeros_like(counts)
        shifted[d:] = counts[:total + 1 - d]
        counts = counts + shifted
    counts /= 2 ** len(doubled)
    w2 = int(2 * w_plus)
    lower = counts[:w2 + 1].sum()
    upper = counts[w2:].sum()
    return min(1.0, 2 * min(lower, upper))


def wilcoxon_signed_rank(
    xs: Sequence[float],
    ys: Sequence[float],
    alpha: float = DEFAULT_ALPHA,
) -> TestResult:
    """Two-sided paired test on real-valued scores; zero differences dropped."""
    if len(xs) != len(ys):
        raise ValueError(f"paired samples are not aligned: {len(xs)} vs {len(ys)}")
    diffs = [float(x) - float(y) for x, y in zip(xs, ys)]
    diffs = [d for d in diffs if d != 0]
    n = len(diffs)
    if n == 0:
        return TestResult("wilcoxon-exact", 0.0, 1.0, alpha, (len(xs), 0), degenerate=True)
    ranks, w_plus = _signed_midranks(diffs)
    if n <= WILCOXON_EXACT_MAX:
        p = _wilcoxon_exact_p(ranks, w_plus)
        return TestResult("wilcoxon-exact", float(w_plus), p, alpha, (len(xs), n))
    mean = n * (n + 1) / 4
    tie_counts: dict[Fraction, int] = {}
    for r in ranks:
        tie_counts[r] = tie_counts.get(r, 0) + 1
    tie_term = sum(t ** 3 - t for t in tie_counts.values()) / 48
    var = n * (n + 1) * (2 * n + 1) / 24 - tie_term
    if var <= 0:
        return TestResult("wilcoxon-normal", float(w_plus), 1.0, alpha, (len(xs), n), degenerate=True)
    d = float(w_plus) - mean
    z = (d - 0.5 * math.copysign(1, d)) / math.sqrt(var) if d != 0 else 0.0
    p = float(2 * sps.norm.sf(abs(z)))
    return TestResult("wilcoxon-normal", float(w_plus), min(1.0, p), alpha, (len(xs), n))


# ---------------------------------------------------------------------------
# Mann-Whitney U, Levene, Spearman
# ---------------------------------------------------------------------------

def mann_whitney_u(
    xs: Sequence[float],
    ys: Sequence[float],
    alpha: float = DEFAULT_ALPHA,
) -> TestResult:
    """Two-sided rank-sum test with tie correction (normal approximation)."""
    if not xs or not ys:
        raise ValueError("both samples must be non-empty")
    res = sps.mannwhitneyu(list(xs), list(ys), alternative="two-sided",
                           method="asymptotic", use_continuity=True)
    return TestResult("mann-whitney-u", float(res.statistic), float(res.pvalue),
                      alpha, (len(xs), len(ys)))


def levene(groups: Sequence[Sequence[float]], alpha: float = DEFAULT_ALPHA) -> TestResult:
    """Levene's test on absolute deviations from group means.

    A significant result indicates heteroscedasticity across the groups.
    """
    if len(groups) < 2:
        raise ValueError("levene needs at least two groups")
    if any(len(g) < 2 for g in groups):
        raise ValueError("every group needs at least two values")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    sizes = tuple(len(g) for g in groups)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat, p = sps.levene(*arrays, center="mean")
    if math.isnan(p):
        # zero spread of deviations everywhere: no heteroscedasticity evidence
        return TestResult("levene", 0.0, 1.0, alpha, sizes, degenerate=True)
    if math.isinf(stat):
        # within-group deviations are constant but differ across groups
        return TestResult("levene", float("inf"), 0.0, alpha, sizes)
    return TestResult("levene", float(stat), float(p), alpha, sizes)


def spearman(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Spearman's rho with midrank tie handling."""
    if len(xs) != len(ys):
        raise ValueError(f"paired samples are not aligned: {len(xs)} vs {len(ys)}")
    if len(xs) < 3:
        raise ValueError("spearman needs at least three paired observations")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        return CorrelationResult(float("nan"), float("nan"), len(xs), degenerate=True)
    rho, p = sps.spearmanr(list(xs), list(ys))
    return CorrelationResult(float(rho), float(p), len(xs))

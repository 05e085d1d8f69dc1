"""Cohort statistics: Spearman rank correlation and the paired Wilcoxon
signed-rank test, exact by enumeration for the small cohorts this kind
of study runs on. A paired Student t is available as a cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import permutations

import numpy as np
from scipy.stats import norm, rankdata
from scipy.stats import t as t_dist

from .errors import (
    AllZeroDifferences,
    TooFewPairs,
    ValueOutOfRange,
    ZeroVariance,
)

#: largest n for which the Wilcoxon null is enumerated exactly
WILCOXON_EXACT_MAX_N = 25

#: largest n for which full-permutation Spearman p is allowed (n! cases)
SPEARMAN_EXACT_MAX_N = 10


class StatMethod(str, Enum):
    SPEARMAN_T_APPROX = "SPEARMAN_T_APPROX"
    SPEARMAN_PERMUTATION = "SPEARMAN_PERMUTATION"
    WILCOXON_EXACT = "WILCOXON_EXACT"
    WILCOXON_NORMAL = "WILCOXON_NORMAL"
    PAIRED_T = "PAIRED_T"


@dataclass(frozen=True)
class PairedSample:
    """One subject measured twice (e.g. by two acquisition routes)."""

    subject_id: str
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueOutOfRange(f"subject {self.subject_id}: non-finite value")


@dataclass(frozen=True)
class StatResult:
    statistic: float
    p_value: float
    n: int
    method: StatMethod
    n_dropped: int = 0


def _split_pairs(pairs: list[PairedSample]) -> tuple[np.ndarray, np.ndarray]:
    ids = [p.subject_id for p in pairs]
    if len(set(ids)) != len(ids):
        raise ValueOutOfRange("subject_id values must be unique")
    a = np.asarray([p.a for p in pairs], dtype=np.float64)
    b = np.asarray([p.b for p in pairs], dtype=np.float64)
    return a, b


def _rank_pearson(ra: np.ndarray, rb: np.ndarray) -> float:
    da = ra - ra.mean()
    db = rb - rb.mean()
    return float((da * db).sum() / math.sqrt((da**2).sum() * (db**2).sum()))


def spearman(pairs: list[PairedSample], exact: bool = False) -> StatResult:
    """Spearman rank correlation with a two-sided p-value.

    Ties get average ranks; rs is the Pearson correlation of the rank
    vectors. The default p comes from t = rs*sqrt((n-2)/(1-rs^2)) on
    n-2 degrees of freedom, floored at the permutation bound 2/n!
    (so rs = +-1 reports 2/n!, never 0). exact=True enumerates all n!
    rank permutations instead (n <= 10).
    """
    n = len(pairs)
    if n < 4:
        raise TooFewPairs(f"need at least 4 pairs, got {n}")
    a, b = _split_pairs(pairs)
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise ZeroVariance("one variable is constant; ranks are undefined")
    ra = rankdata(a, method="average")
    rb = rankdata(b, method="average")
    rs = _rank_pearson(ra, rb)
    rs = min(1.0, max(-1.0, rs))

    if exact:
        if n > SPEARMAN_EXACT_MAX_N:
            raise ValueOutOfRange(
                f"full permutation is limited to n <= {SPEARMAN_EXACT_MAX_N}"
            )
        perms = np.fromiter(
            (x for perm in permutations(range(n)) for x in perm),
            dtype=np.int64,
            count=n * math.factorial(n),
        ).reshape(-1, n)
        da = ra - ra.mean()
        db = rb - rb.mean()
        denom = math.sqrt((da**2).sum() * (db**2).sum())
        rs_all = (db[perms] * da).sum(axis=1) / denom
        hits = int(np.sum(np.abs(rs_all) >= abs(rs) - 1e-12))
        return StatResult(
            statistic=rs,
            p_value=hits / math.factorial(n),
            n=n,
            method=StatMethod.SPEARMAN_PERMUTATION,
        )

    floor = 2.0 / math.factorial(n)
    if abs(rs) == 1.0:
        p = floor
    else:
        t = rs * math.sqrt((n - 2) / (1.0 - rs * rs))
        p = 2.0 * float(t_dist.sf(abs(t), n - 2))
        p = max(min(p, 1.0), floor)
    return StatResult(statistic=rs, p_value=p, n=n, method=StatMethod.SPEARMAN_T_APPROX)


def _wilcoxon_exact_cdf_counts(ranks2: np.ndarray) -> np.ndarray:
    """Null distribution of 2*W+ over all 2^n sign assignments.

    ranks2 holds the doubled ranks (integers even under average-rank
    ties). counts[w] = number of assignments with 2*W+ = w; identical to
    brute-force enumeration, computed by subset-sum convolution.
    """
    total = int(ranks2.sum())
    counts = np.zeros(total + 1, dtype=object)
    counts[0] = 1
    upper = 0
    for r in ranks2.tolist():
        shifted = np.zeros(total + 1, dtype=object)
        shifted[r : upper + r + 1] = counts[: upper + 1]
        counts[: upper + r + 1] = counts[: upper + r + 1] + shifted[: upper + r + 1]
        upper += r
    return counts


def wilcoxon_paired(pairs: list[PairedSample]) -> StatResult:
    """Paired Wilcoxon signed-rank test, two-sided.

    Differences b - a; zero differences are dropped and counted. For
    n <= 25 the p-value is exact: every one of the 2^n sign assignments
    is accounted for (via subset-sum counting, which equals the explicit
    enumeration bit for bit). Above that, normal approximation with
    continuity and tie corrections.
    """
    a, b = _split_pairs(pairs)
    d = b - a
    n_dropped = int(np.sum(d == 0.0))
    d = d[d != 0.0]
    n = d.size
    if n == 0:
        raise AllZeroDifferences("every pair is identical")
    if n < 5:
        raise TooFewPairs(f"need at least 5 nonzero differences, got {n}")
    ranks = rankdata(np.abs(d), method="average")
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)

    if n <= WILCOXON_EXACT_MAX_N:
        # doubled ranks are exact integers even with average-rank ties
        ranks2 = np.rint(2.0 * ranks).astype(np.int64)
        counts = _wilcoxon_exact_cdf_counts(ranks2)
        w2 = int(round(2.0 * w))
        hits = int(sum(counts[: w2 + 1]))
        p = min(1.0, 2.0 * hits / (2**n))
        return StatResult(
            statistic=w,
            p_value=p,
            n=n,
            method=StatMethod.WILCOXON_EXACT,
            n_dropped=n_dropped,
        )

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    var -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
    if var <= 0:
        raise ZeroVariance("all differences tie; the normal approximation degenerates")
    z = (w - mean + 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * float(norm.cdf(z)))
    return StatResult(
        statistic=w,
        p_value=p,
        n=n,
        method=StatMethod.WILCOXON_NORMAL,
        n_dropped=n_dropped,
    )


def paired_t(pairs: list[PairedSample]) -> StatResult:
    """Paired Student t test on differences b - a, two-sided."""
    a, b = _split_pairs(pairs)
    d = b - a
    n = d.size
    if n < 2:
        raise TooFewPairs(f"need at least 2 pairs, got {n}")
    if np.all(d == 0.0):
        raise AllZeroDifferences("every pair is identical")
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise ZeroVariance("differences have zero spread")
    t = float(d.mean()) / (sd / math.sqrt(n))
    p = 2.0 * float(t_dist.sf(abs(t), n - 1))
    return StatResult(statistic=t, p_value=min(1.0, p), n=n, method=StatMethod.PAIRED_T)

"""Normality-gated two-group comparison.

Independent-samples t-test (pooled variance) when both groups pass
Shapiro-Wilk normality and Levene's test (Brown-Forsythe, median-centered)
passes for equal variances, Mann-Whitney U otherwise. The U test is exact
for small tie-free samples and uses the tie-corrected normal approximation
with continuity correction beyond n = 20.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

_EXACT_MAX_N = 20


@dataclass(frozen=True)
class ComparisonResult:
    test_used: str           # "t" or "mannwhitney"
    statistic: float
    p_value: float
    shapiro_p: tuple[float, float] | None
    levene_p: float | None
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "test_used": self.test_used,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "shapiro_p": list(self.shapiro_p) if self.shapiro_p else None,
            "levene_p": self.levene_p,
            "note": self.note,
        }


def _mannwhitney(a: np.ndarray, b: np.ndarray) -> tuple[float, float, str]:
    pooled = np.concatenate([a, b])
    has_ties = len(np.unique(pooled)) < len(pooled)
    if max(len(a), len(b)) <= _EXACT_MAX_N and not has_ties:
        method = "exact"
    else:
        method = "asymptotic"
    res = sps.mannwhitneyu(a, b, alternative="two-sided", method=method)
    return float(res.statistic), float(res.pvalue), method


def compare_groups(a, b, alpha: float = 0.05) -> ComparisonResult:
    """Two-sided comparison of independent samples with the normality gate."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if len(a) < 3 or len(b) < 3:
        raise ValueError("each group needs at least 3 samples")

    constant = (np.ptp(a) == 0.0) or (np.ptp(b) == 0.0)
    if constant:
        stat, p, method = _mannwhitney(a, b)
        return ComparisonResult(
            test_used="mannwhitney", statistic=stat, p_value=p,
            shapiro_p=None, levene_p=None,
            note=f"constant group, Shapiro-Wilk undefined; U test ({method})",
        )

    sw_a = sps.shapiro(a).pvalue
    sw_b = sps.shapiro(b).pvalue
    lev = sps.levene(a, b, center="median").pvalue
    if sw_a > alpha and sw_b > alpha and lev > alpha:
        res = sps.ttest_ind(a, b, equal_var=True)
        return ComparisonResult(
            test_used="t", statistic=float(res.statistic),
            p_value=float(res.pvalue), shapiro_p=(float(sw_a), float(sw_b)),
            levene_p=float(lev),
        )
    stat, p, method = _mannwhitney(a, b)
    return ComparisonResult(
        test_used="mannwhitney", statistic=stat, p_value=p,
        shapiro_p=(float(sw_a), float(sw_b)), levene_p=float(lev),
        note=f"U test ({method})",
    )

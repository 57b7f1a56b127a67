# -*- coding: utf-8 -*-
"""
Statistical comparison kernel.

Exact null distributions are computed over doubled mid-ranks, which are
integers even under ties, so the exact paths need no floating-point
comparisons.
"""
import dataclasses
import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import special
from scipy.stats import entropy, norm, rankdata
from statsmodels.stats.multitest import multipletests

from .errors import InsufficientDataError

logger = logging.getLogger('django_review_bench.stats')

WILCOXON_EXACT_MAX_N = 25
MANN_WHITNEY_EXACT_MAX_MIN_SIZE = 8
MANN_WHITNEY_EXACT_MAX_TOTAL = 200
NORMALIZATION_TOLERANCE = 1e-9


@dataclasses.dataclass(frozen=True)
class PairedSample:
    labels: Tuple[str, ...]
    a: Tuple[float, ...]
    b: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'labels', tuple(self.labels))
        object.__setattr__(self, 'a', tuple(float(v) for v in self.a))
        object.__setattr__(self, 'b', tuple(float(v) for v in self.b))
        if len(self.a) != len(self.b) or len(self.a) != len(self.labels):
            raise ValueError('Paired sample vectors and labels must have equal length')
        if not self.a:
            raise InsufficientDataError('Paired sample is empty')

    @property
    def differences(self) -> np.ndarray:
        return np.asarray(self.a) - np.asarray(self.b)

    @property
    def zero_differences(self) -> int:
        return int(np.count_nonzero(self.differences == 0))


@dataclasses.dataclass(frozen=True)
class TestResult:
    statistic: Optional[float]
    p_value: float
    effect_size: Optional[float]
    n_effective: int
    method: str
    degenerate: bool = False
    reason: str = ''

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _tie_term(ranks: np.ndarray) -> float:
    _, counts = np.unique(ranks, return_counts=True)
    return float(np.sum(counts.astype(float) ** 3 - counts))


def _signed_rank_counts(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Number of sign assignments giving each doubled W+ value."""
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(sample: PairedSample) -> TestResult:
    d = sample.differences
    d = d[d != 0]
    n = int(d.size)
    if n == 0:
        logger.info('Wilcoxon signed-rank: all differences are zero')
        return TestResult(statistic=0.0, p_value=1.0, effect_size=0.0, n_effective=0, method='degenerate',
                          degenerate=True, reason='all differences are zero')
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    effect = (w_plus - w_minus) / (w_plus + w_minus)

    if n <= WILCOXON_EXACT_MAX_N:
        doubled = [int(round(2 * r)) for r in ranks]
        total = sum(doubled)
        observed = int(round(2 * w_plus))
        counts = _signed_rank_counts(doubled)
        values = np.arange(total + 1)
        extreme = np.abs(2 * values - total) >= abs(2 * observed - total)
        p_value = float(counts[extreme].sum() / 2.0 ** n)
        method = 'exact'
    else:
        mean = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term(ranks) / 48.0
        if var <= 0:
            p_value = 1.0
        else:
            z = max(abs(w_plus - mean) - 0.5, 0.0) / np.sqrt(var)
            p_value = float(2.0 * norm.sf(z))
        method = 'normal'
    return TestResult(statistic=min(w_plus, w_minus), p_value=min(1.0, p_value), effect_size=effect,
                      n_effective=n, method=method)


def holm_correction(p_values: Sequence[float]) -> list:
    p = np.asarray(list(p_values), dtype=float)
    if p.size == 0:
        return []
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError('p-values must lie in [0, 1]')
    _, adjusted, _, _ = multipletests(p, method='holm')
    return [float(v) for v in adjusted]


def t_two_tailed_p(t: float, df: int) -> float:
    """Two-tailed Student t probability through the regularized incomplete beta."""
    if np.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def pearson_with_ttest(x: Sequence[float], y: Sequence[float]) -> TestResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError('Pearson vectors must have equal length')
    n = int(x.size)
    if n < 3:
        raise InsufficientDataError(f"Pearson correlation needs at least 3 pairs, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        return TestResult(statistic=None, p_value=1.0, effect_size=None, n_effective=n, method='t',
                          degenerate=True, reason='constant vector')
    r = float(np.clip(np.dot(dx, dy) / np.sqrt(sxx * syy), -1.0, 1.0))
    df = n - 2
    if abs(r) == 1.0:
        t = float(np.copysign(np.inf, r))
    else:
        t = r * np.sqrt(df) / np.sqrt(1.0 - r * r)
    return TestResult(statistic=float(t), p_value=t_two_tailed_p(t, df), effect_size=r, n_effective=n, method='t')


def _subset_sum_counts(doubled_ranks: Sequence[int], k: int) -> np.ndarray:
    """counts[s] = number of size-k subsets whose doubled rank sum is s."""
    total = int(sum(sorted(doubled_ranks, reverse=True)[:k]))
    table = np.zeros((k + 1, total + 1), dtype=np.float64)
    table[0, 0] = 1.0
    for r in doubled_ranks:
        if r > total:
            continue
        for size in range(k, 0, -1):
            table[size, r:] += table[size - 1, :total + 1 - r]
    return table[k]


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n_a, n_b = int(a.size), int(b.size)
    if n_a == 0 or n_b == 0:
        raise InsufficientDataError('Mann-Whitney U needs two non-empty samples')
    pooled = np.concatenate([a, b])
    ranks = rankdata(pooled)
    u_a = float(ranks[:n_a].sum()) - n_a * (n_a + 1) / 2.0
    u_b = n_a * n_b - u_a
    mn = n_a * n_b
    effect = (u_a - u_b) / mn
    big_n = n_a + n_b

    if min(n_a, n_b) <= MANN_WHITNEY_EXACT_MAX_MIN_SIZE and big_n <= MANN_WHITNEY_EXACT_MAX_TOTAL:
        doubled = [int(round(2 * r)) for r in ranks]
        if n_a <= n_b:
            k, observed = n_a, sum(doubled[:n_a])
        else:
            k, observed = n_b, sum(doubled[n_a:])
        counts = _subset_sum_counts(doubled, k)
        centre = k * (big_n + 1)
        sums = np.arange(counts.size)
        extreme = np.abs(sums - centre) >= abs(observed - centre)
        p_value = float(counts[extreme].sum() / counts.sum())
        method = 'exact'
    else:
        var = mn / 12.0 * ((big_n + 1) - _tie_term(ranks) / (big_n * (big_n - 1)))
        if var <= 0:
            p_value = 1.0
        else:
            z = max(abs(u_a - mn / 2.0) - 0.5, 0.0) / np.sqrt(var)
            p_value = float(2.0 * norm.sf(z))
        method = 'normal'
    return TestResult(statistic=u_a, p_value=min(1.0, p_value), effect_size=effect, n_effective=big_n,
                      method=method)


def _as_distribution(p: Sequence[float], name: str = 'p') -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty vector")
    if np.any(arr < 0):
        raise ValueError(f"{name} has negative mass")
    if abs(arr.sum() - 1.0) > NORMALIZATION_TOLERANCE:
        raise ValueError(f"{name} sums to {arr.sum()!r}, not 1")
    return arr


def jensen_shannon_divergence(p: Sequence[float], q: Sequence[float]) -> float:
    p = _as_distribution(p, 'p')
    q = _as_distribution(q, 'q')
    if p.shape != q.shape:
        raise ValueError('Distributions must have the same dimension')
    m = 0.5 * (p + q)
    value = 0.5 * entropy(p, m, base=2) + 0.5 * entropy(q, m, base=2)
    return float(np.clip(value, 0.0, 1.0))


def shannon_entropy(p: Sequence[float]) -> float:
    return float(entropy(_as_distribution(p), base=2))


def significance_stars(p_value: Optional[float]) -> str:
    if p_value is None:
        return ''
    if p_value < 0.001:
        return '***'
    if p_value < 0.01:
        return '**'
    if p_value < 0.05:
        return '*'
    return 'ns'


def correlation_magnitude(r: Optional[float]) -> str:
    if r is None:
        return ''
    r = abs(r)
    if r < 0.10:
        return 'negligible'
    if r < 0.30:
        return 'small'
    if r < 0.50:
        return 'moderate'
    return 'large'

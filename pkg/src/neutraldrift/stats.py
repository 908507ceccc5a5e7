"""Median/IQR, two-tailed Mann-Whitney U and the Vargha-Delaney A measure."""

from __future__ import annotations

import bisect
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

EXACT_THRESHOLD = 8


@dataclass(frozen=True)
class SampleSummary:
    median: float
    iqr: float
    n: int


def quantile(xs: Sequence[float], q: float) -> float:
    """Linear interpolation between order statistics (Hyndman-Fan type 7)."""
    s = sorted(xs)
    if not s:
        raise ValueError("quantile of an empty sample")
    h = (len(s) - 1) * q
    lo = math.floor(h)
    hi = min(lo + 1, len(s) - 1)
    return s[lo] + (h - lo) * (s[hi] - s[lo])


def median_iqr(xs: Sequence[float]) -> SampleSummary:
    if len(xs) == 0:
        raise ValueError("median_iqr of an empty sample")
    s = sorted(xs)
    n = len(s)
    mid = n // 2
    median = s[mid] if n % 2 else (s[mid - 1] + s[mid]) / 2
    return SampleSummary(median, quantile(s, 0.75) - quantile(s, 0.25), n)


def midranks(values: Sequence[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their positions."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        r = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = r
        i = j + 1
    return ranks


def _u_statistic(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, list[float]]:
    ranks = midranks(list(xs) + list(ys))
    n1 = len(xs)
    return sum(ranks[:n1]) - n1 * (n1 + 1) / 2, ranks


def _exact_p(ranks: list[float], n1: int, u_obs: float) -> float:
    """Two-tailed permutation p over all splits of the pooled midranks.

    Counts subsets of size n1 by doubled rank sum (midranks are multiples of
    1/2, so doubled sums are integers) with a knapsack table.
    """
    doubled = [int(round(2 * r)) for r in ranks]
    total = sum(doubled)
    # ways[j][s]: subsets of size j with doubled rank sum s
    ways = [Counter() for _ in range(n1 + 1)]
    ways[0][0] = 1
    for d in doubled:
        for j in range(n1, 0, -1):
            prev = ways[j - 1]
            cur = ways[j]
            for s, c in prev.items():
                cur[s + d] += c
    n2 = len(ranks) - n1
    centre = n1 * n2  # doubled mean of U
    obs_dev = abs(2 * u_obs - centre)
    offset = n1 * (n1 + 1)  # doubled n1(n1+1)/2
    hit = 0
    for s, c in ways[n1].items():
        if abs(s - offset - centre) >= obs_dev - 1e-9:
            hit += c
    return min(1.0, hit / math.comb(len(ranks), n1))


def mann_whitney_u(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Two-tailed Mann-Whitney test; returns (U of xs, p).

    Exact permutation p when the smaller sample has at most 8 values,
    otherwise the tie-corrected normal approximation with continuity
    correction.
    """
    n1, n2 = len(xs), len(ys)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    u, ranks = _u_statistic(xs, ys)
    if len(set(ranks)) == 1:
        return u, 1.0
    if min(n1, n2) <= EXACT_THRESHOLD:
        return u, _exact_p(ranks, n1, u)
    n = n1 + n2
    ties = sum(t**3 - t for t in Counter(ranks).values())
    var = n1 * n2 / 12 * ((n + 1) - ties / (n * (n - 1)))
    if var <= 0:
        return u, 1.0
    dev = max(abs(u - n1 * n2 / 2) - 0.5, 0.0)
    z = dev / math.sqrt(var)
    return u, min(1.0, math.erfc(z / math.sqrt(2)))


def vargha_delaney_a(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Probability that a draw from xs exceeds one from ys, ties counting half."""
    if not xs or not ys:
        raise ValueError("both samples must be non-empty")
    s = sorted(ys)
    twice = 0
    for x in xs:
        lo = bisect.bisect_left(s, x)
        hi = bisect.bisect_right(s, x)
        twice += 2 * lo + (hi - lo)
    return twice / (2 * len(xs) * len(ys))

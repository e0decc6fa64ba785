"""Brute-force reference implementations of every depth metric.

Each function here is a straight-line transcription of the defining formula
with explicit loops: its own rank counting, its own quantile interpolation,
its own pairwise distances. Nothing is shared with the fast implementations
in :mod:`depthscreen.depth` except the tie-policy and quantile conventions,
so agreement between the two is meaningful evidence of correctness. Meant
for small instances (N <= 64); there is no performance requirement.
"""

from __future__ import annotations

import math

import numpy as np

from .depth import DepthParams, DepthResult, Orientation
from .ensemble import FacetMatrix, RankMatrix, TiePolicy

ORACLE_METRICS = ("ID", "MBD", "EXD", "ERLD", "LID", "HMD", "DQ", "RTD")

_DQ_SURROGATE = np.finfo(np.float64).max


def _values_of(data) -> np.ndarray:
    if isinstance(data, FacetMatrix):
        return np.asarray(data.values, dtype=np.float64)
    return np.asarray(data, dtype=np.float64)


def oracle_ranks(values, tie_policy=TiePolicy.ORDINAL_BY_INDEX):
    """1-based ranks per hour by literal counting.

    ordinal_by_index: 1 + #{j : v_j < v_i} + #{j < i : v_j = v_i};
    midrank: tied values share the average of their ordinal ranks.
    """
    values = _values_of(values)
    tie_policy = TiePolicy(tie_policy)
    n, t = values.shape
    ranks = np.zeros((n, t), dtype=np.float64)
    for col in range(t):
        ordinal = np.zeros(n)
        for i in range(n):
            below = 0
            tied_before = 0
            for j in range(n):
                if values[j, col] < values[i, col]:
                    below += 1
                elif values[j, col] == values[i, col] and j < i:
                    tied_before += 1
            ordinal[i] = 1 + below + tied_before
        if tie_policy is TiePolicy.ORDINAL_BY_INDEX:
            ranks[:, col] = ordinal
        else:
            for i in range(n):
                total = 0.0
                count = 0
                for j in range(n):
                    if values[j, col] == values[i, col]:
                        total += ordinal[j]
                        count += 1
                ranks[i, col] = total / count
    return ranks


def _ranks_of(data, tie_policy):
    if isinstance(data, RankMatrix):
        return np.asarray(data.ranks, dtype=np.float64)
    return oracle_ranks(data, tie_policy)


def _pointwise_depth(ranks):
    n, t = ranks.shape
    d = np.zeros((n, t))
    for i in range(n):
        for col in range(t):
            d[i, col] = 1.0 - abs(2.0 * ranks[i, col] - n - 1.0) / n
    return d


def oracle_integrated_depth(data, tie_policy=TiePolicy.ORDINAL_BY_INDEX):
    ranks = _ranks_of(data, tie_policy)
    n, t = ranks.shape
    scores = np.zeros(n)
    for i in range(n):
        s = 0.0
        for col in range(t):
            s += abs(0.5 - ranks[i, col] / n)
        scores[i] = 1.0 - s / t
    return scores


def oracle_modified_band_depth(data, tie_policy=TiePolicy.ORDINAL_BY_INDEX):
    ranks = _ranks_of(data, tie_policy)
    n, t = ranks.shape
    if n < 3:
        raise ValueError("band depth needs N >= 3")
    pairs = n * (n - 1) // 2
    scores = np.zeros(n)
    for i in range(n):
        s = 0.0
        for col in range(t):
            s += (ranks[i, col] - 1.0) * (n - ranks[i, col])
        scores[i] = s / (t * pairs)
    return scores


def oracle_extremal_depth(data, tie_policy=TiePolicy.ORDINAL_BY_INDEX):
    ranks = _ranks_of(data, tie_policy)
    d = _pointwise_depth(ranks)
    n, t = d.shape
    levels = sorted(set(float(x) for x in d.ravel()))
    phi = np.zeros((n, len(levels)))
    for i in range(n):
        for li, r in enumerate(levels):
            count = 0
            for col in range(t):
                if d[i, col] <= r:
                    count += 1
            phi[i, li] = count / t

    def dominates(i, j):
        # equal everywhere, or less mass at the first differing level
        for li in range(len(levels)):
            if phi[i, li] != phi[j, li]:
                return phi[i, li] < phi[j, li]
        return True

    scores = np.zeros(n)
    for i in range(n):
        count = 0
        for j in range(n):
            if dominates(i, j):
                count += 1
        scores[i] = count / n
    return scores


def oracle_extreme_rank_length_depth(data, tie_policy=TiePolicy.ORDINAL_BY_INDEX):
    ranks = _ranks_of(data, tie_policy)
    d = _pointwise_depth(ranks)
    n, t = d.shape
    s = np.sort(d, axis=1)

    def dominates(i, j):
        # equal, or larger sorted depth at the first differing position
        for col in range(t):
            if s[i, col] != s[j, col]:
                return s[i, col] > s[j, col]
        return True

    scores = np.zeros(n)
    for i in range(n):
        count = 0
        for j in range(n):
            if dominates(i, j):
                count += 1
        scores[i] = count / n
    return scores


def oracle_l_infinity_depth(data):
    values = _values_of(data)
    n, t = values.shape
    scores = np.zeros(n)
    for i in range(n):
        total = 0.0
        for j in range(n):
            dist = 0.0
            for col in range(t):
                dist = max(dist, abs(values[j, col] - values[i, col]))
            total += dist
        scores[i] = 1.0 / (1.0 + total / n)
    return scores


def oracle_h_mode_depth(data, h="auto"):
    values = _values_of(data)
    n, t = values.shape

    def l2(i, j):
        s = 0.0
        for col in range(t):
            diff = values[i, col] - values[j, col]
            s += diff * diff
        return math.sqrt(s)

    if isinstance(h, str):
        dists = []
        for i in range(n):
            for j in range(i + 1, n):
                dists.append(l2(i, j))
        bandwidth = _interp_quantile(dists, 0.15)
        if bandwidth <= 0.0:
            vrange = float(values.max() - values.min())
            bandwidth = np.finfo(np.float64).eps * (vrange if vrange > 0.0 else 1.0)
    else:
        bandwidth = float(h)
    kernel_at_zero = 1.0 / (math.sqrt(2.0 * math.pi) * bandwidth)
    scores = np.zeros(n)
    for i in range(n):
        total = 0.0
        for j in range(n):
            z = l2(i, j)
            total += kernel_at_zero * math.exp(-(z * z) / (2.0 * bandwidth * bandwidth))
        # reported scores are normalized by the kernel's value at zero
        scores[i] = (total / n) / kernel_at_zero
    return scores


def _interp_quantile(values, p):
    """Linear interpolation of order statistics at positions (i-1)/(M-1)."""
    s = sorted(float(v) for v in values)
    m = len(s)
    if m == 1:
        return s[0]
    pos = p * (m - 1)
    lo = int(math.floor(pos))
    if lo >= m - 1:
        return s[-1]
    frac = pos - lo
    return s[lo] + frac * (s[lo + 1] - s[lo])


def oracle_directional_quantile(data, p_hi=0.975, p_lo=0.025):
    values = _values_of(data)
    n, t = values.shape
    scores = np.zeros(n)
    mean = np.zeros(t)
    q_hi = np.zeros(t)
    q_lo = np.zeros(t)
    for col in range(t):
        s = 0.0
        for i in range(n):
            s += values[i, col]
        mean[col] = s / n
        q_hi[col] = _interp_quantile(values[:, col], p_hi)
        q_lo[col] = _interp_quantile(values[:, col], p_lo)
    for i in range(n):
        best = -math.inf
        for col in range(t):
            num = values[i, col] - mean[col]
            if values[i, col] >= mean[col]:
                denom = abs(q_hi[col] - mean[col])
            else:
                denom = abs(q_lo[col] - mean[col])
            if denom == 0.0:
                term = 0.0 if num == 0.0 else _DQ_SURROGATE
            else:
                term = num / denom
            if term > best:
                best = term
        scores[i] = best
    return scores


def oracle_random_tukey_depth(data, directions, tie_policy=TiePolicy.ORDINAL_BY_INDEX):
    """Projection depth with explicit directions (injected, never drawn here)."""
    values = _values_of(data)
    directions = np.asarray(directions, dtype=np.float64)
    if directions.ndim == 1:
        directions = directions[None, :]
    n, t = values.shape
    scores = np.full(n, math.inf)
    for v in directions:
        proj = np.zeros(n)
        for i in range(n):
            s = 0.0
            for col in range(t):
                s += values[i, col] * v[col]
            proj[i] = s
        ranks = oracle_ranks(proj[:, None], tie_policy)[:, 0]
        for i in range(n):
            d = 1.0 - abs(2.0 * ranks[i] - n - 1.0) / n
            if d < scores[i]:
                scores[i] = d
    return scores


def oracle_depth(data, metric, *, tie_policy=TiePolicy.ORDINAL_BY_INDEX,
                 h="auto", p_hi=0.975, p_lo=0.025, directions=None) -> DepthResult:
    """Reference scores for one metric, packaged like the fast path's result.

    RTD requires explicit ``directions`` so both sides see the same vectors.
    """
    metric = metric.upper()
    if metric == "ID":
        scores = oracle_integrated_depth(data, tie_policy)
    elif metric == "MBD":
        scores = oracle_modified_band_depth(data, tie_policy)
    elif metric == "EXD":
        scores = oracle_extremal_depth(data, tie_policy)
    elif metric == "ERLD":
        scores = oracle_extreme_rank_length_depth(data, tie_policy)
    elif metric == "LID":
        scores = oracle_l_infinity_depth(data)
    elif metric == "HMD":
        scores = oracle_h_mode_depth(data, h)
    elif metric == "DQ":
        scores = oracle_directional_quantile(data, p_hi, p_lo)
    elif metric == "RTD":
        if directions is None:
            raise ValueError("oracle RTD needs explicit directions")
        scores = oracle_random_tukey_depth(data, directions, tie_policy)
    else:
        raise ValueError(f"unknown metric {metric!r}")

    orientation = Orientation.OUTLYINGNESS if metric == "DQ" else Orientation.DEPTH
    n = len(scores)
    if orientation is Orientation.DEPTH:
        order = sorted(range(n), key=lambda i: (scores[i], i))
    else:
        order = sorted(range(n), key=lambda i: (-scores[i], i))
    return DepthResult(
        metric=metric,
        scores=np.asarray(scores, dtype=np.float64),
        orientation=orientation,
        outlying_order=np.asarray(order, dtype=np.int64),
        params=DepthParams(),
    )

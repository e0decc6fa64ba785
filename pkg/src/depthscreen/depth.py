"""Functional depth metrics for ranking scenario curves by outlyingness.

Eight metrics are provided. Four are rank-based (integrated depth, modified
band depth, extremal depth, extreme rank length depth), three are
distance-based (L-infinity depth, h-mode depth, directional quantile) and
one is projection-based (random Tukey depth). All depth-oriented scores lie
in [0, 1] with 1 the functional centroid; the directional quantile is
natively an outlyingness score (larger = more extreme). Every result also
carries a uniform most-outlying-first ordering so callers never need
per-metric sign logic.

One-sided variants (top ranks = extreme) exist for the band-depth, rank
length and directional-quantile constructions; distance-based metrics have
no directional version.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .ensemble import (
    EnsembleValidationError,
    FacetMatrix,
    RankMatrix,
    TiePolicy,
    pointwise_stats,
    rank_matrix,
)

#: Metric identifiers, in the canonical reporting order.
METRICS = ("ID", "MBD", "EXD", "ERLD", "LID", "HMD", "DQ", "RTD")

#: Metrics that consume ranks only (invariant to per-hour monotone transforms).
RANK_BASED = ("ID", "MBD", "EXD", "ERLD")

#: Finite stand-in for an infinitely outlying directional-quantile hour
#: (deviation from the mean on a side with zero quantile spread).
DQ_DEGENERATE_SURROGATE = np.finfo(np.float64).max

ONE_SIDED_KINDS = ("mbd", "erld", "dq_upper")


class DepthComputationError(ValueError):
    """Invalid metric parameters or input too degenerate for the metric."""


class Orientation(str, Enum):
    DEPTH = "depth"              # larger = deeper (more central)
    OUTLYINGNESS = "outlyingness"  # larger = more extreme


@dataclass(frozen=True)
class DepthParams:
    """Parameters a metric actually used, plus degeneracy flags."""

    tie_policy: TiePolicy | None = None
    bandwidth: float | None = None
    n_projections: int | None = None
    seed: int | None = None
    quantiles: tuple[float, ...] | None = None
    one_sided: bool = False
    flags: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out: dict = {"one_sided": self.one_sided}
        if self.tie_policy is not None:
            out["tie_policy"] = self.tie_policy.value
        if self.bandwidth is not None:
            out["bandwidth"] = self.bandwidth
        if self.n_projections is not None:
            out["n_projections"] = self.n_projections
        if self.seed is not None:
            out["seed"] = self.seed
        if self.quantiles is not None:
            out["quantiles"] = list(self.quantiles)
        if self.flags:
            out["flags"] = list(self.flags)
        return out


@dataclass(frozen=True)
class DepthResult:
    """Scores for one metric plus the uniform outlyingness ordering.

    ``outlying_order`` lists 0-based scenario indices from most to least
    outlying: ascending scores for depth orientation, descending for
    outlyingness, ties broken by scenario index ascending.
    """

    metric: str
    scores: np.ndarray
    orientation: Orientation
    outlying_order: np.ndarray
    params: DepthParams = field(default_factory=DepthParams)

    @property
    def n_scenarios(self) -> int:
        return self.scores.shape[0]

    def outlyingness_rank(self) -> np.ndarray:
        """Per-scenario position in the outlying order (0 = most outlying)."""
        rank = np.empty(self.n_scenarios, dtype=np.int64)
        rank[self.outlying_order] = np.arange(self.n_scenarios)
        return rank


@dataclass(frozen=True)
class DepthCdf:
    """Per-scenario cumulative distribution of pointwise depth values.

    ``levels`` is the ascending vector of attained pointwise-depth values;
    ``mass[i, l]`` is the fraction of hours at which scenario i's pointwise
    depth is <= levels[l]. Each row is non-decreasing and ends at 1.
    """

    levels: np.ndarray
    mass: np.ndarray


def _finish(metric, scores, orientation, params) -> DepthResult:
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise DepthComputationError(f"{metric} produced non-finite scores")
    n = scores.shape[0]
    idx = np.arange(n)
    key = scores if orientation is Orientation.DEPTH else -scores
    order = np.lexsort((idx, key))
    scores.setflags(write=False)
    order.setflags(write=False)
    return DepthResult(metric=metric, scores=scores, orientation=orientation,
                       outlying_order=order, params=params)


def _require_ranks(data, tie_policy) -> RankMatrix:
    if isinstance(data, RankMatrix):
        return data
    if isinstance(data, FacetMatrix):
        return rank_matrix(data, tie_policy)
    raise TypeError(f"expected FacetMatrix or RankMatrix, got {type(data).__name__}")


# ---------------------------------------------------------------------------
# rank-based metrics
# ---------------------------------------------------------------------------

def pointwise_depth(rm: RankMatrix) -> np.ndarray:
    """Per-hour depth of each scenario: 1 - |2 R - N - 1| / N.

    The central rank (N+1)/2 scores 1; the extreme ranks 1 and N score 1/N.
    """
    r = rm.ranks
    n = rm.n_scenarios
    return 1.0 - np.abs(2.0 * r - n - 1.0) / n


def integrated_depth(rm: RankMatrix) -> DepthResult:
    """Average closeness of the per-hour rank to the median rank.

    Score: 1 - mean_t |1/2 - R(t)/N|, in [0, 1]; larger = deeper.
    """
    r = rm.ranks
    n, t = r.shape
    terms = np.abs(0.5 - r / n)
    scores = 1.0 - terms.sum(axis=1) / t
    return _finish("ID", scores, Orientation.DEPTH, DepthParams(tie_policy=rm.tie_policy))


def modified_band_depth(rm: RankMatrix) -> DepthResult:
    """Fraction of scenario pairs whose band contains the curve, averaged over hours.

    Score: mean_t (R(t)-1)(N-R(t)) / C(N,2). The count (R-1)(N-R) is the
    number of pairs strictly bracketing the value at hour t, so extreme
    curves score 0 and the normalization is scenario-independent (the
    induced ordering is what screening consumes).
    """
    r = rm.ranks
    n, t = r.shape
    if n < 3:
        raise DepthComputationError(f"band depth is degenerate for N={n}; need N >= 3")
    pairs = n * (n - 1) // 2
    terms = (r - 1.0) * (n - r)
    scores = terms.sum(axis=1) / (t * pairs)
    return _finish("MBD", scores, Orientation.DEPTH, DepthParams(tie_policy=rm.tie_policy))


def depth_cdf(rm: RankMatrix) -> DepthCdf:
    """Cumulative distribution over hours of each scenario's pointwise depth."""
    d = pointwise_depth(rm)
    n, t = d.shape
    levels = np.unique(d)
    sorted_d = np.sort(d, axis=1)
    mass = np.empty((n, levels.shape[0]), dtype=np.float64)
    for i in range(n):
        mass[i] = np.searchsorted(sorted_d[i], levels, side="right") / t
    return DepthCdf(levels=levels, mass=mass)


def _lex_group_counts(rows: np.ndarray):
    """For each row, count rows strictly lex-smaller and rows equal to it.

    Comparison is lexicographic over columns left to right.
    """
    n = rows.shape[0]
    # np.lexsort keys: last key is primary, so feed columns reversed
    order = np.lexsort(rows.T[::-1])
    sorted_rows = rows[order]
    less = np.empty(n, dtype=np.int64)
    equal = np.empty(n, dtype=np.int64)
    start = 0
    for i in range(1, n + 1):
        if i == n or not np.array_equal(sorted_rows[i], sorted_rows[start]):
            less[order[start:i]] = start
            equal[order[start:i]] = i - start
            start = i
    return less, equal


def extremal_depth(rm: RankMatrix) -> DepthResult:
    """Depth by left-tail ordering of the pointwise-depth CDFs.

    A scenario dominates another when their depth CDFs agree everywhere or,
    at the smallest level where they differ, it has accumulated less mass
    (spends fewer hours at extreme ranks). Score: fraction of scenarios
    dominated, in {1/N, ..., 1}; at least one scenario attains 1.
    """
    cdf = depth_cdf(rm)
    n = cdf.mass.shape[0]
    less, _ = _lex_group_counts(cdf.mass)
    scores = (n - less) / n
    return _finish("EXD", scores, Orientation.DEPTH, DepthParams(tie_policy=rm.tie_policy))


def extreme_rank_length_depth(rm: RankMatrix) -> DepthResult:
    """Depth by lexicographic comparison of ascending-sorted pointwise depths.

    A scenario dominates another when its sorted depth vector is equal or
    larger at the first differing position (its worst hours are less
    extreme). Score: fraction of scenarios dominated, in {1/N, ..., 1}.
    """
    d = pointwise_depth(rm)
    n = d.shape[0]
    sorted_d = np.sort(d, axis=1)
    less, equal = _lex_group_counts(sorted_d)
    # i dominates j iff sorted_d[i] >=lex sorted_d[j]
    scores = (less + equal) / n
    return _finish("ERLD", scores, Orientation.DEPTH, DepthParams(tie_policy=rm.tie_policy))


# ---------------------------------------------------------------------------
# distance-based metrics
# ---------------------------------------------------------------------------

def _pairwise_chebyshev(values: np.ndarray) -> np.ndarray:
    n, t = values.shape
    dist = np.zeros((n, n), dtype=np.float64)
    buf = np.empty((n, n), dtype=np.float64)
    for col in range(t):
        v = values[:, col]
        np.subtract(v[:, None], v[None, :], out=buf)
        np.abs(buf, out=buf)
        np.maximum(dist, buf, out=dist)
    return dist


def _pairwise_sq_l2(values: np.ndarray) -> np.ndarray:
    # Gram identity on mean-centered data: distances are shift-invariant, and
    # centering keeps the cancellation error at machine epsilon of the spread
    centered = values - values.mean(axis=0)
    sq = (centered * centered).sum(axis=1)
    dist = sq[:, None] + sq[None, :] - 2.0 * (centered @ centered.T)
    np.clip(dist, 0.0, None, out=dist)
    return dist


def l_infinity_depth(fm: FacetMatrix) -> DepthResult:
    """Depth from the average Chebyshev distance to the other curves.

    Score: 1 / (1 + mean_j max_t |f_j(t) - f_i(t)|), in (0, 1]; the average
    includes the zero self-distance.
    """
    values = fm.values
    if values.shape[0] < 2:
        raise DepthComputationError("L-infinity depth needs at least 2 scenarios")
    mean_dist = _pairwise_chebyshev(values).mean(axis=1)
    scores = 1.0 / (1.0 + mean_dist)
    return _finish("LID", scores, Orientation.DEPTH, DepthParams())


def h_mode_depth(fm: FacetMatrix, h: float | str = "auto") -> DepthResult:
    """Kernel-density style depth from pairwise L2 distances.

    Scores average a Gaussian kernel of the pairwise distances and are
    normalized by the kernel's value at zero, so an all-identical ensemble
    scores 1 everywhere. With ``h="auto"`` the bandwidth is the interpolated
    15% quantile of the off-diagonal pairwise distances; when that quantile
    is zero the bandwidth falls back to a machine-epsilon-scaled data range
    and the result is flagged ``degenerate_bandwidth``.
    """
    values = fm.values
    n = values.shape[0]
    if n < 2:
        raise DepthComputationError("h-mode depth needs at least 2 scenarios")
    sq = _pairwise_sq_l2(values)
    flags: tuple[str, ...] = ()
    if isinstance(h, str):
        if h != "auto":
            raise DepthComputationError(f"bandwidth must be a positive number or 'auto', got {h!r}")
        iu = np.triu_indices(n, k=1)
        pair_dists = np.sqrt(sq[iu])
        bandwidth = float(np.quantile(pair_dists, 0.15))
        if bandwidth <= 0.0:
            vrange = float(values.max() - values.min())
            bandwidth = np.finfo(np.float64).eps * (vrange if vrange > 0.0 else 1.0)
            flags = ("degenerate_bandwidth",)
    else:
        bandwidth = float(h)
        if bandwidth <= 0.0:
            raise DepthComputationError(f"bandwidth must be positive, got {bandwidth}")
    scores = np.exp(-sq / (2.0 * bandwidth * bandwidth)).mean(axis=1)
    params = DepthParams(bandwidth=bandwidth, flags=flags)
    return _finish("HMD", scores, Orientation.DEPTH, params)


def _dq_branches(values, mean, q_hi, q_lo):
    """Signed per-hour deviation ratios with degenerate-denominator handling."""
    num = values - mean[None, :]
    denom_hi = np.abs(q_hi - mean)[None, :]
    denom_lo = np.abs(q_lo - mean)[None, :]
    denom = np.where(values >= mean[None, :], denom_hi, denom_lo)
    degenerate = denom == 0.0
    flagged = False
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / denom
    if degenerate.any():
        zero_num = num == 0.0
        ratio = np.where(degenerate & zero_num, 0.0, ratio)
        surrogate_mask = degenerate & ~zero_num
        if surrogate_mask.any():
            ratio = np.where(surrogate_mask, DQ_DEGENERATE_SURROGATE, ratio)
            flagged = True
    return ratio, flagged


def directional_quantile(fm: FacetMatrix, p_hi: float = 0.975, p_lo: float = 0.025) -> DepthResult:
    """Worst-hour deviation from the mean curve, scaled by the quantile spread.

    Hours above the mean are scaled by |Q_hi - mean|, hours below by
    |Q_lo - mean|; the score is the maximum over hours of the signed ratio.
    Orientation is outlyingness: a curve tracking the mean scores 0, one
    touching the upper quantile at its worst hour scores 1. An hour whose
    scaling quantile coincides with the mean contributes 0 when the curve
    also sits on the mean there, otherwise a finite maximal-outlyingness
    surrogate (and the result is flagged).
    """
    values = fm.values
    n = values.shape[0]
    if n < 3:
        raise DepthComputationError("directional quantile needs at least 3 scenarios")
    stats = pointwise_stats(fm, (p_lo, p_hi))
    ratio, flagged = _dq_branches(values, stats.mean, stats.quantiles[p_hi], stats.quantiles[p_lo])
    scores = ratio.max(axis=1)
    params = DepthParams(quantiles=(p_lo, p_hi), flags=("degenerate_denominator",) if flagged else ())
    return _finish("DQ", scores, Orientation.OUTLYINGNESS, params)


# ---------------------------------------------------------------------------
# projection-based metric
# ---------------------------------------------------------------------------

def _rank_vector(values: np.ndarray, tie_policy: TiePolicy) -> np.ndarray:
    fake = FacetMatrix(values[:, None], "_proj", "load")
    return rank_matrix(fake, tie_policy).ranks[:, 0]


def random_tukey_depth(
    fm: FacetMatrix,
    k: int = 50,
    seed: int = 0,
    directions=None,
    tie_policy: TiePolicy = TiePolicy.ORDINAL_BY_INDEX,
) -> DepthResult:
    """Minimum projection depth over random directions.

    Each direction v gives projections sum_t f_i(t) v(t); their ranks feed
    the same pointwise-depth form as the rank-based metrics, and the score
    is the minimum over the K directions. Directions are drawn i.i.d.
    standard normal from the seed (materialized up front, so results do not
    depend on evaluation order); an explicit ``directions`` array overrides
    the draw.
    """
    values = fm.values
    n, t = values.shape
    if n < 2:
        raise DepthComputationError("random Tukey depth needs at least 2 scenarios")
    if directions is not None:
        dirs = np.ascontiguousarray(directions, dtype=np.float64)
        if dirs.ndim == 1:
            dirs = dirs[None, :]
        if dirs.shape[1] != t:
            raise DepthComputationError(
                f"directions must have {t} coordinates per vector, got shape {dirs.shape}"
            )
        if dirs.shape[0] == 0:
            raise DepthComputationError("need at least one projection direction")
        if (~np.any(dirs != 0.0, axis=1)).any():
            raise DepthComputationError("zero projection direction is not allowed")
        used_k = dirs.shape[0]
        used_seed = None
    else:
        if k < 1:
            raise DepthComputationError(f"projection count must be >= 1, got {k}")
        rng = np.random.default_rng(seed)
        dirs = rng.standard_normal((k, t))
        used_k = k
        used_seed = seed
    scores = np.full(n, np.inf)
    for v in dirs:
        proj = (values * v[None, :]).sum(axis=1)
        ranks = _rank_vector(proj, tie_policy)
        d = 1.0 - np.abs(2.0 * ranks - n - 1.0) / n
        np.minimum(scores, d, out=scores)
    params = DepthParams(tie_policy=tie_policy, n_projections=used_k, seed=used_seed)
    return _finish("RTD", scores, Orientation.DEPTH, params)


# ---------------------------------------------------------------------------
# one-sided variants
# ---------------------------------------------------------------------------

def one_sided_variant(data, kind: str, p_hi: float = 0.975) -> DepthResult:
    """Directional (top = extreme) variant of a metric.

    ``kind="mbd"``: mean normalized rank (R-1)/(N-1) over hours.
    ``kind="erld"``: lexicographic order of descending-sorted raw ranks.
    ``kind="dq_upper"``: upper branch only of the directional quantile;
    a curve below the mean everywhere scores 0 (needs a FacetMatrix).
    All return orientation = outlyingness. Distance-based metrics (lid,
    hmd) have no one-sided version and are rejected.
    """
    kind = kind.lower()
    if kind in ("lid", "hmd"):
        raise DepthComputationError(
            f"no one-sided variant of {kind.upper()}: its distance-based construction has no direction"
        )
    if kind not in ONE_SIDED_KINDS:
        raise DepthComputationError(f"unknown one-sided kind {kind!r}; expected one of {ONE_SIDED_KINDS}")

    if kind == "dq_upper":
        if not isinstance(data, FacetMatrix):
            raise TypeError("dq_upper needs the facet values (FacetMatrix), not a rank matrix")
        values = data.values
        if values.shape[0] < 3:
            raise DepthComputationError("directional quantile needs at least 3 scenarios")
        stats = pointwise_stats(data, (p_hi,))
        mean = stats.mean
        ratio, flagged = _dq_branches(values, mean, stats.quantiles[p_hi], stats.quantiles[p_hi])
        upper = np.where(values >= mean[None, :], ratio, 0.0)
        scores = upper.max(axis=1)
        params = DepthParams(quantiles=(p_hi,), one_sided=True,
                             flags=("degenerate_denominator",) if flagged else ())
        return _finish("DQ", scores, Orientation.OUTLYINGNESS, params)

    rm = _require_ranks(data, TiePolicy.ORDINAL_BY_INDEX)
    r = rm.ranks
    n, t = r.shape
    if kind == "mbd":
        scores = ((r - 1.0) / (n - 1.0)).sum(axis=1) / t
        params = DepthParams(tie_policy=rm.tie_policy, one_sided=True)
        return _finish("MBD", scores, Orientation.OUTLYINGNESS, params)

    # erld variant: descending-sorted rank vectors, first-difference-larger = more extreme
    sorted_desc = -np.sort(-r, axis=1)
    less, equal = _lex_group_counts(sorted_desc)
    scores = (less + equal) / n
    params = DepthParams(tie_policy=rm.tie_policy, one_sided=True)
    return _finish("ERLD", scores, Orientation.OUTLYINGNESS, params)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def compute_depth(
    fm: FacetMatrix,
    metric: str,
    *,
    tie_policy: TiePolicy = TiePolicy.ORDINAL_BY_INDEX,
    bandwidth: float | str = "auto",
    k: int = 50,
    seed: int = 0,
    p_hi: float = 0.975,
    p_lo: float = 0.025,
    one_sided: bool = False,
    directions=None,
) -> DepthResult:
    """Compute one metric by name on a facet matrix.

    Rank-based metrics rank `fm` with `tie_policy` first. With
    ``one_sided=True`` only MBD, ERLD and DQ are valid (DQ maps to its
    upper-branch variant).
    """
    name = metric.upper()
    if name not in METRICS:
        raise DepthComputationError(f"unknown metric {metric!r}; expected one of {METRICS}")
    if one_sided:
        if name == "DQ":
            return one_sided_variant(fm, "dq_upper", p_hi=p_hi)
        if name in ("MBD", "ERLD"):
            return one_sided_variant(rank_matrix(fm, tie_policy), name.lower())
        raise DepthComputationError(
            f"no one-sided variant of {name}"
            + (": its distance-based construction has no direction" if name in ("LID", "HMD") else "")
        )
    if name in RANK_BASED:
        rm = rank_matrix(fm, tie_policy)
        return {
            "ID": integrated_depth,
            "MBD": modified_band_depth,
            "EXD": extremal_depth,
            "ERLD": extreme_rank_length_depth,
        }[name](rm)
    if name == "LID":
        return l_infinity_depth(fm)
    if name == "HMD":
        return h_mode_depth(fm, h=bandwidth)
    if name == "DQ":
        return directional_quantile(fm, p_hi=p_hi, p_lo=p_lo)
    return random_tukey_depth(fm, k=k, seed=seed, directions=directions, tie_policy=tie_policy)

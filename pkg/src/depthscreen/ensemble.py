"""Scenario ensembles and the facet/rank/statistic machinery built on them.

An ensemble holds one operating day's scenario curves: N scenarios by T
hours, per entity (the aggregate "grid" plus optional zones) and per base
facet (load, solar, wind). Derived facets (vre, net_load) are computed on
demand and cached. All downstream ranking works on the N x T matrix of one
(entity, facet) pair.
"""

from __future__ import annotations

import datetime
import threading
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

BASE_FACETS = ("load", "solar", "wind")
DERIVED_FACETS = ("vre", "net_load")
FACETS = BASE_FACETS + DERIVED_FACETS

GRID_ENTITY = "grid"

#: Facets that are physically non-negative and validated as such.
NONNEGATIVE_FACETS = frozenset(BASE_FACETS)


class EnsembleValidationError(ValueError):
    """Scenario data violates a structural invariant (shape, sign, finiteness)."""


class MissingFacetError(LookupError):
    """A requested (entity, facet) pair is not present or not derivable."""


class TiePolicy(str, Enum):
    """How equal values within one hour are ranked."""

    ORDINAL_BY_INDEX = "ordinal_by_index"
    MIDRANK = "midrank"


@dataclass(frozen=True)
class FacetMatrix:
    """One (entity, facet) view of an ensemble: N scenarios x T hours, MWh.

    Values are stored as a read-only float64 array; entries must be finite.
    """

    values: np.ndarray
    entity: str
    facet: str

    def __post_init__(self):
        try:
            arr = np.ascontiguousarray(self.values, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise EnsembleValidationError(
                f"facet matrix for ({self.entity}, {self.facet}) is not rectangular numeric data: {exc}"
            ) from None
        if arr.ndim != 2:
            raise EnsembleValidationError(
                f"facet matrix for ({self.entity}, {self.facet}) must be 2-D, got shape {arr.shape}"
            )
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EnsembleValidationError(
                f"facet matrix for ({self.entity}, {self.facet}) is empty: shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise EnsembleValidationError(
                f"facet matrix for ({self.entity}, {self.facet}) contains NaN or infinite entries"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n_scenarios(self) -> int:
        return self.values.shape[0]

    @property
    def n_hours(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class RankMatrix:
    """Per-hour scenario ranks, 1-based; fractional entries under midrank."""

    ranks: np.ndarray
    tie_policy: TiePolicy

    def __post_init__(self):
        arr = np.ascontiguousarray(self.ranks, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "ranks", arr)

    @property
    def n_scenarios(self) -> int:
        return self.ranks.shape[0]

    @property
    def n_hours(self) -> int:
        return self.ranks.shape[1]


@dataclass(frozen=True)
class PointwiseStats:
    """Columnwise mean and interpolated quantile curves."""

    mean: np.ndarray
    quantiles: dict[float, np.ndarray]


class ScenarioEnsemble:
    """One day's scenario universe.

    Parameters
    ----------
    day : datetime.date
        Operating day the scenarios target.
    base : mapping of (entity, facet) -> array_like
        Base facet matrices, each N x T. `facet` must be one of
        ``load``/``solar``/``wind``. All matrices must agree on N and T.
    entities : sequence of str, optional
        Entity ordering; inferred from `base` keys when omitted (grid first,
        zones in first-seen order).

    Notes
    -----
    Ensembles are immutable once constructed; derived facets are cached with
    at-most-once computation, so instances are safe to share across threads.
    Grid-vs-zone-sum consistency is reported (see `grid_consistency_report`)
    rather than enforced, because inputs may be pre-aggregated.
    """

    def __init__(self, day, base, entities=None):
        if not isinstance(day, datetime.date) or isinstance(day, datetime.datetime):
            raise EnsembleValidationError(f"day must be a datetime.date, got {type(day).__name__}")
        if not base:
            raise EnsembleValidationError("ensemble needs at least one base facet matrix")

        matrices: dict[tuple[str, str], FacetMatrix] = {}
        shape = None
        for (entity, facet), values in base.items():
            if facet not in BASE_FACETS:
                raise EnsembleValidationError(
                    f"({entity}, {facet}): only base facets {BASE_FACETS} may be supplied; "
                    "vre and net_load are derived"
                )
            fm = values if isinstance(values, FacetMatrix) else FacetMatrix(values, entity, facet)
            if (fm.entity, fm.facet) != (entity, facet):
                fm = FacetMatrix(fm.values, entity, facet)
            if shape is None:
                shape = fm.values.shape
            elif fm.values.shape != shape:
                raise EnsembleValidationError(
                    f"({entity}, {facet}) has shape {fm.values.shape}, expected {shape} "
                    "(all matrices in an ensemble share N and T)"
                )
            if facet in NONNEGATIVE_FACETS and (fm.values < 0).any():
                raise EnsembleValidationError(f"({entity}, {facet}) contains negative MWh values")
            matrices[(entity, facet)] = fm

        self.day = day
        self._base = matrices
        self.n_scenarios, self.n_hours = shape
        if entities is None:
            seen = []
            for entity, _ in matrices:
                if entity not in seen:
                    seen.append(entity)
            if GRID_ENTITY in seen:
                seen.remove(GRID_ENTITY)
                seen.insert(0, GRID_ENTITY)
            entities = seen
        self.entities = tuple(entities)
        self._derived: dict[tuple[str, str], FacetMatrix] = {}
        self._derive_lock = threading.Lock()

    # -- introspection -------------------------------------------------

    @property
    def zones(self) -> tuple[str, ...]:
        return tuple(e for e in self.entities if e != GRID_ENTITY)

    def base_facets(self, entity) -> tuple[str, ...]:
        return tuple(f for f in BASE_FACETS if (entity, f) in self._base)

    def has_facet(self, entity, facet) -> bool:
        if facet in BASE_FACETS:
            return (entity, facet) in self._base
        if facet == "vre":
            needed = ("solar", "wind")
        elif facet == "net_load":
            needed = ("load", "solar", "wind")
        else:
            return False
        return all((entity, f) in self._base for f in needed)

    def grid_consistency_report(self, rtol=1e-6):
        """Compare grid matrices against the per-hour sum over zones.

        Returns a dict facet -> {"max_rel_dev": float, "within_tol": bool}
        for every base facet present both at grid level and for all zones.
        Empty dict when there is nothing to compare. Never raises.
        """
        report = {}
        zones = self.zones
        if not zones:
            return report
        for facet in BASE_FACETS:
            if (GRID_ENTITY, facet) not in self._base:
                continue
            if not all((z, facet) in self._base for z in zones):
                continue
            grid = self._base[(GRID_ENTITY, facet)].values
            zonal_sum = sum(self._base[(z, facet)].values for z in zones)
            scale = np.maximum(np.abs(grid), np.abs(zonal_sum))
            scale[scale == 0.0] = 1.0
            max_rel = float(np.max(np.abs(grid - zonal_sum) / scale))
            report[facet] = {"max_rel_dev": max_rel, "within_tol": max_rel <= rtol}
        return report


def derive_facet(ens: ScenarioEnsemble, entity: str, facet: str) -> FacetMatrix:
    """Return the (entity, facet) matrix, deriving vre/net_load as needed.

    Base facets are returned as stored; ``vre = solar + wind`` and
    ``net_load = load - solar - wind``. Derived results are cached on the
    ensemble (computed at most once).
    """
    if facet in BASE_FACETS:
        try:
            return ens._base[(entity, facet)]
        except KeyError:
            raise MissingFacetError(_missing_message(ens, entity, facet)) from None
    if facet not in DERIVED_FACETS:
        raise MissingFacetError(f"unknown facet '{facet}'; expected one of {FACETS}")

    key = (entity, facet)
    cached = ens._derived.get(key)
    if cached is not None:
        return cached
    with ens._derive_lock:
        cached = ens._derived.get(key)
        if cached is not None:
            return cached
        needed = ("solar", "wind") if facet == "vre" else ("load", "solar", "wind")
        for f in needed:
            if (entity, f) not in ens._base:
                raise MissingFacetError(_missing_message(ens, entity, f, wanted=facet))
        if facet == "vre":
            values = ens._base[(entity, "solar")].values + ens._base[(entity, "wind")].values
        else:
            values = (
                ens._base[(entity, "load")].values
                - ens._base[(entity, "solar")].values
                - ens._base[(entity, "wind")].values
            )
        fm = FacetMatrix(values, entity, facet)
        ens._derived[key] = fm
        return fm


def _missing_message(ens, entity, facet, wanted=None):
    present = sorted({e for e, _ in ens._base})
    if entity not in present:
        return f"entity '{entity}' not in ensemble (has: {', '.join(present)})"
    have = ", ".join(ens.base_facets(entity)) or "none"
    msg = f"entity '{entity}' has no '{facet}' data (has: {have})"
    if wanted is not None:
        msg += f"; needed to derive '{wanted}'"
    return msg


def auc(fm: FacetMatrix) -> np.ndarray:
    """Daily area under the curve per scenario: the row sum over hours."""
    return fm.values.sum(axis=1)


def rank_matrix(fm: FacetMatrix, tie_policy: TiePolicy = TiePolicy.ORDINAL_BY_INDEX) -> RankMatrix:
    """Rank scenarios within each hour, 1-based.

    Under ``ordinal_by_index`` equal values are ordered by scenario index,
    so every column is a permutation of 1..N. Under ``midrank`` tied values
    share the average of their ordinal ranks (possibly fractional).
    """
    tie_policy = TiePolicy(tie_policy)
    values = fm.values
    n, t = values.shape
    if n < 2:
        raise EnsembleValidationError(f"ranking needs at least 2 scenarios, got {n}")
    ranks = np.empty((n, t), dtype=np.float64)
    positions = np.arange(1, n + 1, dtype=np.float64)
    for col in range(t):
        v = values[:, col]
        order = np.argsort(v, kind="stable")
        ordinal = np.empty(n, dtype=np.float64)
        ordinal[order] = positions
        if tie_policy is TiePolicy.ORDINAL_BY_INDEX:
            ranks[:, col] = ordinal
            continue
        sorted_v = v[order]
        out = np.empty(n, dtype=np.float64)
        start = 0
        for i in range(1, n + 1):
            if i == n or sorted_v[i] != sorted_v[start]:
                # ordinal ranks start+1..i share their average
                out[order[start:i]] = (start + 1 + i) / 2.0
                start = i
        ranks[:, col] = out
    return RankMatrix(ranks, tie_policy)


def pointwise_stats(fm: FacetMatrix, probs) -> PointwiseStats:
    """Columnwise mean and quantile curves.

    Quantiles interpolate order statistics linearly at plotting positions
    (i - 1)/(N - 1), i.e. numpy's default "linear" method.
    """
    values = fm.values
    if values.shape[0] < 2:
        raise EnsembleValidationError("pointwise statistics need at least 2 scenarios")
    probs = tuple(float(p) for p in probs)
    for p in probs:
        if not 0.0 < p < 1.0:
            raise EnsembleValidationError(f"quantile probability {p} outside (0, 1)")
    mean = values.mean(axis=0)
    quantiles = {p: np.quantile(values, p, axis=0) for p in probs}
    return PointwiseStats(mean=mean, quantiles=quantiles)

"""Selection pipelines: AUC pre-screen, depth ranking, zonal merge, presets.

A pipeline turns one day's ensemble into the index set predicted to be
operationally extreme. The general shape is: (1) optionally keep the n1
scenarios most extreme by a facet's daily AUC, restoring directionality to
the two-sided depth metrics; (2) rank survivors by a depth metric on a
primary facet; (3) optionally rank them on a second (zonal) facet and merge
the two orderings by growing equal prefixes until their union reaches the
selection size n2; (4) n2 itself is either fixed or adaptive in the number
of high-peak net-load scenarios. Named presets capture the four case-study
configurations (operational cost, reserves shortfall, load shedding and
renewable curtailment, the last with a warm/cold seasonal split).

Screening never sees outcome labels; extremality thresholds live in
:mod:`depthscreen.evaluation`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .depth import METRICS, DepthResult, compute_depth
from .ensemble import (
    GRID_ENTITY,
    FacetMatrix,
    MissingFacetError,
    ScenarioEnsemble,
    TiePolicy,
    auc,
    derive_facet,
)

TARGETS = ("cost", "reserves_shortfall", "load_shedding", "vre_curtailment")

#: Adaptive selection-size defaults: 100 + count of scenarios whose peak
#: grid net load reaches 62.5 GWh (62,500 MWh in hourly units).
ADAPTIVE_BASE = 100
ADAPTIVE_PEAK_THRESHOLD_MWH = 62_500.0

#: Months treated as the warm (summer/fall) season by seasonal configs.
WARM_MONTHS = frozenset({6, 7, 8, 9, 10, 11})

PRESET_NAMES = ("cost", "rs", "ls", "ls-zonal", "vc", "vc-seasonal")


class ConfigError(ValueError):
    """Malformed pipeline configuration."""


class InfeasibleError(ValueError):
    """Configuration cannot run against this ensemble (sizes, missing facets)."""


@dataclass(frozen=True)
class FacetRef:
    entity: str
    facet: str

    def to_dict(self):
        return {"entity": self.entity, "facet": self.facet}

    @classmethod
    def from_dict(cls, d):
        return cls(entity=str(d["entity"]), facet=str(d["facet"]))


@dataclass(frozen=True)
class PrescreenFacet:
    """Facet and direction used for AUC ordering (and pre-screen cuts)."""

    entity: str
    facet: str
    direction: str = "top"

    def __post_init__(self):
        if self.direction not in ("top", "bottom"):
            raise ConfigError(f"prescreen direction must be 'top' or 'bottom', got {self.direction!r}")

    def to_dict(self):
        return {"entity": self.entity, "facet": self.facet, "direction": self.direction}

    @classmethod
    def from_dict(cls, d):
        return cls(entity=str(d["entity"]), facet=str(d["facet"]),
                   direction=str(d.get("direction", "top")))


@dataclass(frozen=True)
class FixedN2:
    n2: int

    def __post_init__(self):
        if self.n2 < 1:
            raise ConfigError(f"fixed n2 must be positive, got {self.n2}")

    def to_dict(self):
        return {"kind": "fixed", "n2": self.n2}


@dataclass(frozen=True)
class AdaptiveN2:
    base: int = ADAPTIVE_BASE
    peak_threshold_mwh: float = ADAPTIVE_PEAK_THRESHOLD_MWH

    def __post_init__(self):
        if self.base <= 0:
            raise ConfigError(f"adaptive n2 base must be positive, got {self.base}")

    def to_dict(self):
        return {"kind": "adaptive", "base": self.base,
                "peak_threshold_mwh": self.peak_threshold_mwh}


def _n2_rule_from_dict(d) -> Union[FixedN2, AdaptiveN2]:
    kind = d.get("kind")
    if kind == "fixed":
        return FixedN2(n2=int(d["n2"]))
    if kind == "adaptive":
        return AdaptiveN2(base=int(d.get("base", ADAPTIVE_BASE)),
                          peak_threshold_mwh=float(d.get("peak_threshold_mwh",
                                                         ADAPTIVE_PEAK_THRESHOLD_MWH)))
    raise ConfigError(f"n2 rule kind must be 'fixed' or 'adaptive', got {kind!r}")


@dataclass(frozen=True)
class DepthSpec:
    """Metric choice plus the parameters the depth stage passes through."""

    metric: str
    tie_policy: TiePolicy = TiePolicy.ORDINAL_BY_INDEX
    bandwidth: Union[float, str] = "auto"
    k: int = 50
    seed: int = 0
    p_hi: float = 0.975
    p_lo: float = 0.025
    one_sided: bool = False

    def __post_init__(self):
        if self.metric.upper() not in METRICS:
            raise ConfigError(f"unknown depth metric {self.metric!r}; expected one of {METRICS}")
        object.__setattr__(self, "metric", self.metric.upper())
        object.__setattr__(self, "tie_policy", TiePolicy(self.tie_policy))

    def compute(self, fm: FacetMatrix) -> DepthResult:
        return compute_depth(
            fm, self.metric, tie_policy=self.tie_policy, bandwidth=self.bandwidth,
            k=self.k, seed=self.seed, p_hi=self.p_hi, p_lo=self.p_lo,
            one_sided=self.one_sided,
        )

    def to_dict(self):
        out = {"metric": self.metric, "tie_policy": self.tie_policy.value,
               "seed": self.seed, "one_sided": self.one_sided}
        if self.metric == "HMD":
            out["bandwidth"] = self.bandwidth
        if self.metric == "RTD":
            out["k"] = self.k
        if self.metric == "DQ":
            out["p_hi"] = self.p_hi
            out["p_lo"] = self.p_lo
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(
            metric=str(d["metric"]),
            tie_policy=TiePolicy(d.get("tie_policy", TiePolicy.ORDINAL_BY_INDEX)),
            bandwidth=d.get("bandwidth", "auto"),
            k=int(d.get("k", 50)),
            seed=int(d.get("seed", 0)),
            p_hi=float(d.get("p_hi", 0.975)),
            p_lo=float(d.get("p_lo", 0.025)),
            one_sided=bool(d.get("one_sided", False)),
        )


@dataclass(frozen=True)
class SeasonalConfig:
    warm_months: frozenset[int]
    warm: "PipelineConfig"
    cold: "PipelineConfig"

    def to_dict(self):
        return {"warm_months": sorted(self.warm_months),
                "warm": self.warm.to_dict(), "cold": self.cold.to_dict()}


@dataclass(frozen=True)
class PipelineConfig:
    """Full description of one selection pipeline.

    ``prescreen_facet`` supplies the AUC ordering; the cut is applied only
    when ``n1`` is set. ``depth=None`` selects by AUC alone. ``grid_facet``
    is the primary depth facet (it may reference a zone, e.g. for the
    warm-season curtailment preset); ``zonal_facet`` adds the union-merge
    stage. ``seasonal`` dispatches to a warm or cold sub-config on the
    ensemble's month and overrides every other field.
    """

    target: str
    prescreen_facet: PrescreenFacet
    n1: Optional[int] = None
    depth: Optional[DepthSpec] = None
    grid_facet: Optional[FacetRef] = None
    zonal_facet: Optional[FacetRef] = None
    n2_rule: Union[FixedN2, AdaptiveN2] = field(default_factory=lambda: FixedN2(75))
    seasonal: Optional[SeasonalConfig] = None
    preset: Optional[str] = None

    def __post_init__(self):
        if self.target not in TARGETS:
            raise ConfigError(f"unknown target {self.target!r}; expected one of {TARGETS}")
        if self.n1 is not None and self.n1 < 1:
            raise ConfigError(f"n1 must be positive, got {self.n1}")
        if self.depth is not None and self.grid_facet is None:
            raise ConfigError("a depth stage needs grid_facet")
        if self.zonal_facet is not None and self.depth is None:
            raise ConfigError("zonal_facet without a depth stage makes no sense")
        if (self.n1 is not None and isinstance(self.n2_rule, FixedN2)
                and self.n2_rule.n2 > self.n1):
            raise ConfigError(
                f"fixed n2={self.n2_rule.n2} exceeds prescreen size n1={self.n1}"
            )

    def to_dict(self):
        out = {"target": self.target, "prescreen": self.prescreen_facet.to_dict(),
               "n1": self.n1, "n2": self.n2_rule.to_dict()}
        if self.preset:
            out["preset"] = self.preset
        out["depth"] = self.depth.to_dict() if self.depth else None
        out["grid_facet"] = self.grid_facet.to_dict() if self.grid_facet else None
        out["zonal_facet"] = self.zonal_facet.to_dict() if self.zonal_facet else None
        if self.seasonal:
            out["seasonal"] = self.seasonal.to_dict()
        return out

    @classmethod
    def from_dict(cls, d) -> "PipelineConfig":
        d = dict(d)
        base = None
        if "preset" in d:
            base = preset(d.pop("preset"))
        if base is not None and not (set(d) - {"label_rule"}):
            return base
        merged = base.to_dict() if base is not None else {}
        if base is not None and base.seasonal is not None:
            raise ConfigError(
                f"preset {base.preset!r} dispatches by season; override its warm/cold "
                "sub-configs explicitly instead of the top level"
            )
        merged.update(d)
        seasonal = None
        if merged.get("seasonal"):
            s = merged["seasonal"]
            seasonal = SeasonalConfig(
                warm_months=frozenset(int(m) for m in s["warm_months"]),
                warm=cls.from_dict(s["warm"]),
                cold=cls.from_dict(s["cold"]),
            )
        try:
            return cls(
                target=merged["target"],
                prescreen_facet=PrescreenFacet.from_dict(merged["prescreen"]),
                n1=None if merged.get("n1") is None else int(merged["n1"]),
                depth=DepthSpec.from_dict(merged["depth"]) if merged.get("depth") else None,
                grid_facet=FacetRef.from_dict(merged["grid_facet"]) if merged.get("grid_facet") else None,
                zonal_facet=FacetRef.from_dict(merged["zonal_facet"]) if merged.get("zonal_facet") else None,
                n2_rule=_n2_rule_from_dict(merged.get("n2", {"kind": "fixed", "n2": 75})),
                seasonal=seasonal,
                preset=base.preset if base is not None else None,
            )
        except KeyError as exc:
            raise ConfigError(f"pipeline config missing required key: {exc}") from None


@dataclass(frozen=True)
class StageLog:
    """What every stage of one pipeline run did, for audit and reports."""

    season: Optional[str] = None
    auc_direction: str = "top"
    prescreen_survivors: Optional[tuple[int, ...]] = None  # most extreme AUC first
    n1: Optional[int] = None
    n2: int = 0
    n2_source: str = "fixed"
    bypassed_depth: bool = False
    grid_order: Optional[tuple[int, ...]] = None   # most outlying first
    zonal_order: Optional[tuple[int, ...]] = None
    merge_j: Optional[int] = None
    trimmed: tuple[int, ...] = ()

    def to_dict(self):
        out = {"n2": self.n2, "n2_source": self.n2_source,
               "bypassed_depth": self.bypassed_depth, "auc_direction": self.auc_direction}
        if self.season is not None:
            out["season"] = self.season
        if self.n1 is not None:
            out["n1"] = self.n1
        if self.prescreen_survivors is not None:
            out["prescreen_survivors"] = list(self.prescreen_survivors)
        if self.grid_order is not None:
            out["grid_order"] = list(self.grid_order)
        if self.zonal_order is not None:
            out["zonal_order"] = list(self.zonal_order)
        if self.merge_j is not None:
            out["merge_j"] = self.merge_j
        if self.trimmed:
            out["trimmed"] = list(self.trimmed)
        return out


@dataclass(frozen=True)
class SelectionSet:
    """Selected scenario ids (most outlying first) plus stage provenance.

    ``scores`` aligns with ``indices`` and holds each selected scenario's
    primary outlyingness score: the depth-stage score when a depth ran
    (grid facet for merged selections), otherwise the prescreen-facet AUC.
    """

    day: object
    indices: tuple[int, ...]
    stage_log: StageLog
    config: PipelineConfig
    scores: tuple[float, ...] = ()

    def __contains__(self, idx):
        return idx in set(self.indices)

    def as_set(self) -> frozenset[int]:
        return frozenset(self.indices)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def auc_order(fm: FacetMatrix, direction: str = "top") -> np.ndarray:
    """All scenario ids ordered by AUC extremeness, ties by index ascending."""
    a = auc(fm)
    idx = np.arange(a.shape[0])
    key = -a if direction == "top" else a
    return np.lexsort((idx, key))


def auc_prescreen(fm: FacetMatrix, n1: int, direction: str = "top") -> np.ndarray:
    """Ids of the n1 scenarios with the most extreme AUC (ordered, extreme first)."""
    n = fm.n_scenarios
    if not 1 <= n1 <= n:
        raise InfeasibleError(f"prescreen size n1={n1} outside [1, N={n}]")
    if direction not in ("top", "bottom"):
        raise ConfigError(f"direction must be 'top' or 'bottom', got {direction!r}")
    return auc_order(fm, direction)[:n1]


def adaptive_n2(net_load_grid: FacetMatrix, base: int = ADAPTIVE_BASE,
                peak_threshold_mwh: float = ADAPTIVE_PEAK_THRESHOLD_MWH) -> int:
    """base + number of scenarios whose peak hourly net load reaches the threshold.

    Capped at N so the result is always a feasible selection size.
    """
    if base <= 0:
        raise ConfigError(f"adaptive base must be positive, got {base}")
    peaks = net_load_grid.values.max(axis=1)
    count = int((peaks >= peak_threshold_mwh).sum())
    return min(base + count, net_load_grid.n_scenarios)


def merge_union(grid_order, zonal_order, n2: int):
    """Merge two outlyingness orderings into one set of size n2.

    Finds the smallest prefix length j* such that the union of the two
    top-j* prefixes reaches n2 members. If the union overshoots (by at most
    one for genuine prefixes), members are trimmed alternately from the
    deepest tail of each list, zonal first, preferring members exclusive to
    the list being trimmed.

    Returns ``(selected, j_star, trimmed)`` where `selected` is ordered most
    outlying first (by best position across the two lists, grid position
    breaking ties).
    """
    grid_order = list(grid_order)
    zonal_order = list(zonal_order)
    if set(grid_order) != set(zonal_order):
        raise InfeasibleError("grid and zonal orderings must cover the same candidate set")
    if len(grid_order) != len(set(grid_order)):
        raise InfeasibleError("orderings must not repeat candidates")
    total = len(grid_order)
    if not 1 <= n2 <= total:
        raise InfeasibleError(f"merge size n2={n2} outside [1, {total}]")

    j_star = None
    for j in range(1, total + 1):
        if len(set(grid_order[:j]) | set(zonal_order[:j])) >= n2:
            j_star = j
            break
    g_prefix = grid_order[:j_star]
    z_prefix = zonal_order[:j_star]
    selected = set(g_prefix) | set(z_prefix)

    trimmed = []
    turn = "zonal"
    while len(selected) > n2:
        prefix = z_prefix if turn == "zonal" else g_prefix
        other = set(g_prefix if turn == "zonal" else z_prefix)
        victim = next((s for s in reversed(prefix) if s in selected and s not in other), None)
        if victim is None:
            victim = next(s for s in reversed(prefix) if s in selected)
        selected.remove(victim)
        trimmed.append(victim)
        turn = "grid" if turn == "zonal" else "zonal"

    g_pos = {s: p for p, s in enumerate(g_prefix)}
    z_pos = {s: p for p, s in enumerate(z_prefix)}
    big = total + 1

    def sort_key(s):
        gp = g_pos.get(s, big)
        zp = z_pos.get(s, big)
        return (min(gp, zp), gp, s)

    ordered = sorted(selected, key=sort_key)
    return ordered, j_star, trimmed


def _depth_order_on(ens, facet_ref: FacetRef, survivors: np.ndarray, spec: DepthSpec):
    """Outlyingness order and scores (by original id) on a survivor subset."""
    fm = derive_facet(ens, facet_ref.entity, facet_ref.facet)
    sub = FacetMatrix(fm.values[survivors], fm.entity, fm.facet)
    result = spec.compute(sub)
    order = [int(survivors[i]) for i in result.outlying_order]
    score_by_id = {int(survivors[i]): float(result.scores[i]) for i in range(len(survivors))}
    return order, score_by_id


def run_pipeline(ens: ScenarioEnsemble, cfg: PipelineConfig) -> SelectionSet:
    """Execute one pipeline on one day's ensemble.

    Stages: seasonal dispatch; AUC ordering (and n1 cut when configured);
    selection-size resolution (fixed or adaptive, capped at N); if the
    adaptive size exceeds n1 the depth stage is bypassed and the top-n2 by
    prescreen AUC are returned; otherwise depth ranking on the primary
    facet, with an optional zonal ranking merged by prefix union.
    """
    season = None
    if cfg.seasonal is not None:
        if ens.day.month in cfg.seasonal.warm_months:
            season, sub = "warm", cfg.seasonal.warm
        else:
            season, sub = "cold", cfg.seasonal.cold
        inner = run_pipeline(ens, sub)
        log = replace(inner.stage_log, season=season)
        return SelectionSet(day=ens.day, indices=inner.indices, stage_log=log, config=cfg)

    n = ens.n_scenarios
    try:
        pre_fm = derive_facet(ens, cfg.prescreen_facet.entity, cfg.prescreen_facet.facet)
    except MissingFacetError as exc:
        raise InfeasibleError(str(exc)) from None
    direction = cfg.prescreen_facet.direction
    full_auc_order = auc_order(pre_fm, direction)

    if cfg.n1 is not None:
        if cfg.n1 > n:
            raise InfeasibleError(f"prescreen size n1={cfg.n1} exceeds N={n}")
        survivors_ordered = full_auc_order[: cfg.n1]
    else:
        survivors_ordered = full_auc_order

    if isinstance(cfg.n2_rule, AdaptiveN2):
        try:
            nl_grid = derive_facet(ens, GRID_ENTITY, "net_load")
        except MissingFacetError as exc:
            raise InfeasibleError(f"adaptive n2 needs grid net load: {exc}") from None
        n2 = adaptive_n2(nl_grid, cfg.n2_rule.base, cfg.n2_rule.peak_threshold_mwh)
        n2_source = "adaptive"
    else:
        n2 = min(cfg.n2_rule.n2, n)
        n2_source = "fixed"

    base_log = StageLog(
        season=season, auc_direction=direction,
        prescreen_survivors=tuple(int(i) for i in survivors_ordered) if cfg.n1 is not None else None,
        n1=cfg.n1, n2=n2, n2_source=n2_source,
    )

    pre_auc = auc(pre_fm)

    # no depth stage: selection is by AUC extremeness alone
    if cfg.depth is None:
        if n2 > len(full_auc_order):
            raise InfeasibleError(f"n2={n2} exceeds N={n}")
        chosen = tuple(int(i) for i in full_auc_order[:n2])
        scores = tuple(float(pre_auc[i]) for i in chosen)
        return SelectionSet(ens.day, chosen, base_log, cfg, scores)

    # adaptive selection larger than the prescreen pool: fall back to pure AUC
    if cfg.n1 is not None and n2 > cfg.n1:
        chosen = tuple(int(i) for i in full_auc_order[:n2])
        scores = tuple(float(pre_auc[i]) for i in chosen)
        log = replace(base_log, n2_source="adaptive", bypassed_depth=True)
        return SelectionSet(ens.day, chosen, log, cfg, scores)

    if n2 > len(survivors_ordered):
        raise InfeasibleError(f"n2={n2} exceeds the candidate pool of {len(survivors_ordered)}")

    # depth stages run on index-ascending survivor submatrices so that tie
    # breaking stays by original scenario id
    survivors = np.sort(np.asarray(survivors_ordered))
    try:
        grid_order, grid_scores = _depth_order_on(ens, cfg.grid_facet, survivors, cfg.depth)
    except MissingFacetError as exc:
        raise InfeasibleError(str(exc)) from None

    if cfg.zonal_facet is None:
        chosen = tuple(grid_order[:n2])
        scores = tuple(grid_scores[i] for i in chosen)
        log = replace(base_log, grid_order=tuple(grid_order))
        return SelectionSet(ens.day, chosen, log, cfg, scores)

    try:
        zonal_order, _ = _depth_order_on(ens, cfg.zonal_facet, survivors, cfg.depth)
    except MissingFacetError as exc:
        raise InfeasibleError(str(exc)) from None
    merged, j_star, trimmed = merge_union(grid_order, zonal_order, n2)
    scores = tuple(grid_scores[i] for i in merged)
    log = replace(base_log, grid_order=tuple(grid_order), zonal_order=tuple(zonal_order),
                  merge_j=j_star, trimmed=tuple(trimmed))
    return SelectionSet(ens.day, tuple(merged), log, cfg, scores)


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _grid_nl_top():
    return PrescreenFacet(GRID_ENTITY, "net_load", "top")


def preset(name: str) -> PipelineConfig:
    """Named case-study configurations.

    cost        top-75 by grid net-load AUC, no depth stage.
    rs          n1=150 net-load prescreen, h-mode depth on grid net load, n2=75.
    ls          n1=550 prescreen, L-infinity depth on grid net load, n2=225.
    ls-zonal    n1=650 prescreen, extremal depth on grid and North Central
                net load merged by prefix union, adaptive n2.
    vc          single stage, directional quantile on grid load, n2=362.
    vc-seasonal warm months: n1=450 prescreen, directional quantile on Far
                West load, n2=76; cold months: single-stage grid-load
                directional quantile, n2=76 (known weak: cold-season
                curtailment needs sub-zonal features).

    Preset sizes assume paper-scale ensembles (N=1000); override n1/n2 for
    smaller synthetic days.
    """
    key = name.lower()
    if key == "cost":
        return PipelineConfig(
            target="cost", prescreen_facet=_grid_nl_top(), n1=None, depth=None,
            n2_rule=FixedN2(75), preset="cost",
        )
    if key == "rs":
        return PipelineConfig(
            target="reserves_shortfall", prescreen_facet=_grid_nl_top(), n1=150,
            depth=DepthSpec("HMD"), grid_facet=FacetRef(GRID_ENTITY, "net_load"),
            n2_rule=FixedN2(75), preset="rs",
        )
    if key == "ls":
        return PipelineConfig(
            target="load_shedding", prescreen_facet=_grid_nl_top(), n1=550,
            depth=DepthSpec("LID"), grid_facet=FacetRef(GRID_ENTITY, "net_load"),
            n2_rule=FixedN2(225), preset="ls",
        )
    if key == "ls-zonal":
        return PipelineConfig(
            target="load_shedding", prescreen_facet=_grid_nl_top(), n1=650,
            depth=DepthSpec("EXD"), grid_facet=FacetRef(GRID_ENTITY, "net_load"),
            zonal_facet=FacetRef("north_central", "net_load"),
            n2_rule=AdaptiveN2(), preset="ls-zonal",
        )
    if key == "vc":
        return PipelineConfig(
            target="vre_curtailment", prescreen_facet=_grid_nl_top(), n1=None,
            depth=DepthSpec("DQ"), grid_facet=FacetRef(GRID_ENTITY, "load"),
            n2_rule=FixedN2(362), preset="vc",
        )
    if key == "vc-seasonal":
        warm = PipelineConfig(
            target="vre_curtailment", prescreen_facet=_grid_nl_top(), n1=450,
            depth=DepthSpec("DQ"), grid_facet=FacetRef("far_west", "load"),
            n2_rule=FixedN2(76),
        )
        cold = PipelineConfig(
            target="vre_curtailment", prescreen_facet=_grid_nl_top(), n1=None,
            depth=DepthSpec("DQ"), grid_facet=FacetRef(GRID_ENTITY, "load"),
            n2_rule=FixedN2(76),
        )
        return PipelineConfig(
            target="vre_curtailment", prescreen_facet=_grid_nl_top(),
            n2_rule=FixedN2(76),
            seasonal=SeasonalConfig(warm_months=WARM_MONTHS, warm=warm, cold=cold),
            preset="vc-seasonal",
        )
    raise ConfigError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")

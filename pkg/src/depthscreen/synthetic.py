"""Desk-scale synthetic ensembles, planted outliers and synthetic labels.

The generator draws smooth Gaussian curves around per-facet mean profiles
using a squared-exponential hour covariance, with optional equicorrelation
between facets and optional grid-as-sum-of-zones aggregation. It exists to
exercise the ranking and screening machinery end to end without a grid
simulator; calibration fidelity is explicitly not a goal.

Outlier planting implements the magnitude/shape taxonomy used throughout:
magnitude shifts (in sigma units), circular time warps (which preserve the
daily AUC exactly) and mid-day-centered ramps. Synthetic outcome labels tie
non-negative outcome totals to net-load behavior through a monotone link so
that ground truth is known by construction.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ensemble import (
    BASE_FACETS,
    GRID_ENTITY,
    EnsembleValidationError,
    ScenarioEnsemble,
    auc,
    derive_facet,
)
from .evaluation import OUTCOME_METRICS, EDOutcomes

#: 1-based hours with nonzero daylight; solar noise is masked outside.
DAYLIGHT_HOURS = (7, 19)

LINK_KINDS = ("affine", "peak_threshold", "zonal_trigger")
OUTLIER_KINDS = ("magnitude_shift", "shape_timewarp", "ramp")


class GeneratorError(ValueError):
    """Invalid generator spec, outlier plan or outcome link."""


def sinusoidal_profile(base: float, amplitude: float, peak_hour: float = 17.0,
                       n_hours: int = 24) -> np.ndarray:
    """Smooth daily profile: base + amplitude * cos centered on peak_hour."""
    hours = np.arange(1, n_hours + 1, dtype=np.float64)
    return base + amplitude * np.cos(2.0 * np.pi * (hours - peak_hour) / n_hours)


def daylight_mask(n_hours: int = 24) -> np.ndarray:
    """Half-sine weight over the daylight window, zero at night, peak 1."""
    lo, hi = DAYLIGHT_HOURS
    hours = np.arange(1, n_hours + 1, dtype=np.float64)
    mask = np.sin(np.pi * (hours - lo) / (hi - lo))
    mask[(hours < lo) | (hours > hi)] = 0.0
    return np.clip(mask, 0.0, None)


def solar_profile(peak: float, n_hours: int = 24) -> np.ndarray:
    """Daylight-shaped solar mean profile with the given midday peak."""
    return peak * daylight_mask(n_hours)


@dataclass(frozen=True)
class FacetProfile:
    """Mean curve and noise kernel for one (entity, facet)."""

    mean: np.ndarray
    sigma: float = 0.0
    length_scale: float = 4.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.mean, dtype=np.float64)
        arr.setflags(write=False)
        object.__setattr__(self, "mean", arr)
        if self.sigma < 0.0:
            raise GeneratorError(f"sigma must be >= 0, got {self.sigma}")
        if self.length_scale <= 0.0:
            raise GeneratorError(f"length_scale must be > 0, got {self.length_scale}")
        if (arr < 0.0).any():
            raise GeneratorError("mean profiles must be non-negative MWh")


@dataclass(frozen=True)
class GeneratorSpec:
    """Everything needed to draw one day's ensemble deterministically."""

    n_scenarios: int
    n_hours: int = 24
    entities: dict = field(default_factory=dict)  # entity -> {facet -> FacetProfile}
    cross_facet_rho: float = 0.0
    aggregate_grid: bool = False
    seed: int = 0
    day: datetime.date = datetime.date(2018, 6, 4)

    def __post_init__(self):
        if self.n_scenarios < 1:
            raise GeneratorError(f"n_scenarios must be >= 1, got {self.n_scenarios}")
        if self.n_hours < 1:
            raise GeneratorError(f"n_hours must be >= 1, got {self.n_hours}")
        if not -1.0 <= self.cross_facet_rho <= 1.0:
            raise GeneratorError(f"cross_facet_rho must be in [-1, 1], got {self.cross_facet_rho}")
        if not self.entities:
            raise GeneratorError("spec needs at least one entity")
        for entity, facets in self.entities.items():
            if self.aggregate_grid and entity == GRID_ENTITY:
                raise GeneratorError("aggregate_grid builds the grid; do not also spec it")
            for facet, profile in facets.items():
                if facet not in BASE_FACETS:
                    raise GeneratorError(f"({entity}, {facet}): only base facets can be generated")
                if profile.mean.shape != (self.n_hours,):
                    raise GeneratorError(
                        f"({entity}, {facet}) mean profile has length {profile.mean.shape[0]}, "
                        f"expected {self.n_hours}"
                    )


def _sq_exp_cholesky(n_hours, length_scale):
    hours = np.arange(n_hours, dtype=np.float64)
    delta = hours[:, None] - hours[None, :]
    cov = np.exp(-0.5 * (delta / length_scale) ** 2)
    cov[np.diag_indices(n_hours)] += 1e-10
    return np.linalg.cholesky(cov)


def _facet_mix_cholesky(n_facets, rho):
    corr = np.full((n_facets, n_facets), rho, dtype=np.float64)
    np.fill_diagonal(corr, 1.0)
    eigmin = float(np.linalg.eigvalsh(corr).min())
    if eigmin < -1e-12:
        raise GeneratorError(
            f"cross-facet correlation {rho} is not positive semi-definite for "
            f"{n_facets} facets (needs rho >= {-1.0 / (n_facets - 1):.3f})"
        )
    jittered = corr + np.eye(n_facets) * 1e-10
    return np.linalg.cholesky(jittered)


def generate_ensemble(spec: GeneratorSpec) -> ScenarioEnsemble:
    """Draw the ensemble described by `spec`.

    Deterministic in `spec.seed`; each scenario consumes its own
    counter-derived substream, so the output is independent of any
    parallel evaluation order. Solar noise is shaped by the daylight mask
    and all base facets are clipped at zero.
    """
    n, t = spec.n_scenarios, spec.n_hours
    mask = daylight_mask(t)
    entity_names = sorted(spec.entities)
    per_entity = {}
    for entity in entity_names:
        facets = sorted(spec.entities[entity])
        profiles = [spec.entities[entity][f] for f in facets]
        chol_t = {
            f: _sq_exp_cholesky(t, p.length_scale) if p.sigma > 0.0 else None
            for f, p in zip(facets, profiles)
        }
        mix = _facet_mix_cholesky(len(facets), spec.cross_facet_rho) if len(facets) > 1 else None
        per_entity[entity] = (facets, profiles, chol_t, mix)

    streams = np.random.SeedSequence(spec.seed).spawn(n)
    base = {
        (entity, facet): np.empty((n, t))
        for entity in entity_names
        for facet in per_entity[entity][0]
    }
    for i, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        for entity in entity_names:
            facets, profiles, chol_t, mix = per_entity[entity]
            innovations = rng.standard_normal((len(facets), t))
            if mix is not None:
                innovations = mix @ innovations
            for row, (facet, profile) in enumerate(zip(facets, profiles)):
                if profile.sigma > 0.0:
                    noise = profile.sigma * (chol_t[facet] @ innovations[row])
                else:
                    noise = np.zeros(t)
                if facet == "solar":
                    noise = noise * mask
                base[(entity, facet)][i] = np.clip(profile.mean + noise, 0.0, None)

    if spec.aggregate_grid:
        facet_sets = [set(per_entity[e][0]) for e in entity_names]
        common = set.intersection(*facet_sets) if facet_sets else set()
        if not common:
            raise GeneratorError("aggregate_grid needs a facet common to every zone")
        for facet in sorted(common):
            base[(GRID_ENTITY, facet)] = sum(base[(e, facet)] for e in entity_names)

    return ScenarioEnsemble(spec.day, base)


def generate_days(spec: GeneratorSpec, days) -> dict:
    """One ensemble per day, each from an independent child seed of `spec.seed`."""
    days = list(days)
    children = np.random.SeedSequence(spec.seed).spawn(len(days))
    out = {}
    for day, child in zip(days, children):
        day_seed = int(child.generate_state(1)[0])
        day_spec = GeneratorSpec(
            n_scenarios=spec.n_scenarios, n_hours=spec.n_hours, entities=spec.entities,
            cross_facet_rho=spec.cross_facet_rho, aggregate_grid=spec.aggregate_grid,
            seed=day_seed, day=day,
        )
        out[day] = generate_ensemble(day_spec)
    return out


# ---------------------------------------------------------------------------
# planted outliers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantedOutlier:
    index: int
    kind: str
    amount: float  # sigma units (shift), hours (timewarp), sigma/hour (ramp)

    def __post_init__(self):
        if self.kind not in OUTLIER_KINDS:
            raise GeneratorError(f"unknown outlier kind {self.kind!r}; expected one of {OUTLIER_KINDS}")
        if not math.isfinite(self.amount):
            raise GeneratorError("outlier amount must be finite")


@dataclass(frozen=True)
class OutlierPlan:
    """Which scenarios of one (entity, facet) get perturbed, and how.

    `sigma` is the MWh scale for shift and ramp amounts (typically the
    generator's facet sigma).
    """

    entity: str
    facet: str
    sigma: float
    outliers: tuple[PlantedOutlier, ...]

    def __post_init__(self):
        if self.facet not in BASE_FACETS:
            raise GeneratorError("outliers are planted on base facets only")
        indices = [o.index for o in self.outliers]
        if len(indices) != len(set(indices)):
            raise GeneratorError("outlier plan assigns the same scenario twice")


def plant_outliers(ens: ScenarioEnsemble, plan: OutlierPlan) -> ScenarioEnsemble:
    """Return a new ensemble with the planned scenarios perturbed.

    Magnitude shifts add amount * sigma at every hour; time warps roll the
    curve circularly (daily AUC is exactly preserved); ramps add a linear
    trend centered mid-day (zero mean over hours for even T). Results are
    clipped at zero to keep the base-facet sign invariant.
    """
    key = (plan.entity, plan.facet)
    if key not in ens._base:
        raise GeneratorError(f"ensemble has no ({plan.entity}, {plan.facet}) matrix to perturb")
    n, t = ens.n_scenarios, ens.n_hours
    for o in plan.outliers:
        if not 0 <= o.index < n:
            raise GeneratorError(f"outlier index {o.index} outside [0, {n})")
    values = ens._base[key].values.copy()
    hours_centered = np.arange(t, dtype=np.float64) - (t - 1) / 2.0
    for o in plan.outliers:
        row = values[o.index]
        if o.kind == "magnitude_shift":
            row = row + o.amount * plan.sigma
        elif o.kind == "shape_timewarp":
            row = np.roll(row, int(o.amount))
        else:
            row = row + o.amount * plan.sigma * hours_centered
        values[o.index] = np.clip(row, 0.0, None)
    base = {k: fm.values for k, fm in ens._base.items()}
    base[key] = values
    return ScenarioEnsemble(ens.day, base, entities=ens.entities)


# ---------------------------------------------------------------------------
# synthetic outcome labels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OutcomeLink:
    """Monotone link from net-load behavior to a non-negative outcome.

    kind "affine": total = scale * (daily grid net-load AUC - ensemble min),
    strictly increasing in the AUC when noise_sd = 0.
    kind "peak_threshold": total = scale * excess of the grid net-load peak
    over its `threshold_quantile` across scenarios (zero below).
    kind "zonal_trigger": same excess rule but on one zone's facet peak, so
    the trigger is only partially visible in grid aggregates.

    Totals are spread over hours proportionally to the (clipped) net load
    of the driving entity; optional Gaussian noise is added to the totals
    and re-clipped at zero.
    """

    metric: str = "cost"
    kind: str = "affine"
    scale: float = 1.0
    noise_sd: float = 0.0
    threshold_quantile: float = 0.9
    zone: Optional[str] = None
    zone_facet: str = "net_load"

    def __post_init__(self):
        if self.metric not in OUTCOME_METRICS:
            raise GeneratorError(f"unknown outcome metric {self.metric!r}")
        if self.kind not in LINK_KINDS:
            raise GeneratorError(f"unknown link kind {self.kind!r}; expected one of {LINK_KINDS}")
        if self.kind == "zonal_trigger" and not self.zone:
            raise GeneratorError("zonal_trigger link needs a zone")
        if not 0.0 < self.threshold_quantile < 1.0:
            raise GeneratorError("threshold_quantile must be in (0, 1)")
        if self.scale <= 0.0:
            raise GeneratorError("scale must be positive")


def synth_outcomes(ens: ScenarioEnsemble, link: OutcomeLink, seed: int = 0) -> EDOutcomes:
    """Outcome matrices whose ground-truth extremes follow the link by construction."""
    if link.kind == "affine":
        grid_nl = derive_facet(ens, GRID_ENTITY, "net_load")
        a = auc(grid_nl)
        totals = link.scale * (a - a.min())
        driver = grid_nl
    elif link.kind == "peak_threshold":
        grid_nl = derive_facet(ens, GRID_ENTITY, "net_load")
        peaks = grid_nl.values.max(axis=1)
        tau = float(np.quantile(peaks, link.threshold_quantile))
        totals = link.scale * np.clip(peaks - tau, 0.0, None)
        driver = grid_nl
    else:
        zone_fm = derive_facet(ens, link.zone, link.zone_facet)
        peaks = zone_fm.values.max(axis=1)
        tau = float(np.quantile(peaks, link.threshold_quantile))
        totals = link.scale * np.clip(peaks - tau, 0.0, None)
        driver = zone_fm

    if link.noise_sd > 0.0:
        rng = np.random.default_rng(seed)
        totals = totals + link.noise_sd * rng.standard_normal(totals.shape)
    totals = np.clip(totals, 0.0, None)

    weights = np.clip(driver.values, 0.0, None)
    row_sums = weights.sum(axis=1, keepdims=True)
    flat = row_sums[:, 0] <= 0.0
    if flat.any():
        weights[flat] = 1.0
        row_sums = weights.sum(axis=1, keepdims=True)
    hourly = totals[:, None] * (weights / row_sums)
    return EDOutcomes(ens.day, {link.metric: hourly})


# ---------------------------------------------------------------------------
# JSON spec parsing (shared by the CLI `synth` command and the service)
# ---------------------------------------------------------------------------

def _profile_from_dict(entity, facet, d, n_hours) -> FacetProfile:
    if "mean" in d:
        mean = np.asarray(d["mean"], dtype=np.float64)
    elif "profile" in d:
        p = d["profile"]
        if "solar_peak" in p:
            mean = solar_profile(float(p["solar_peak"]), n_hours)
        else:
            mean = sinusoidal_profile(
                float(p["base"]), float(p.get("amplitude", 0.0)),
                float(p.get("peak_hour", 17.0)), n_hours,
            )
    else:
        raise GeneratorError(
            f"({entity}, {facet}): profile needs either 'mean' (list of {n_hours}) "
            "or 'profile' ({base, amplitude, peak_hour} or {solar_peak})"
        )
    return FacetProfile(
        mean=mean,
        sigma=float(d.get("sigma", 0.0)),
        length_scale=float(d.get("length_scale", 4.0)),
    )


def generator_spec_from_dict(doc, seed: int | None = None) -> tuple[GeneratorSpec, list]:
    """Build a GeneratorSpec (plus its day list) from the JSON document form.

    The document's optional "days" list drives multi-day generation; `seed`
    overrides the document's seed when given.
    """
    doc = dict(doc)
    n_hours = int(doc.get("n_hours", 24))
    entities = {}
    for entity, facets in doc.get("entities", {}).items():
        entities[entity] = {
            facet: _profile_from_dict(entity, facet, fd, n_hours)
            for facet, fd in facets.items()
        }
    days_raw = doc.get("days")
    if days_raw:
        days = [datetime.date.fromisoformat(d) for d in days_raw]
    else:
        days = [datetime.date.fromisoformat(doc["day"])] if "day" in doc else [
            datetime.date(2018, 6, 4)
        ]
    spec = GeneratorSpec(
        n_scenarios=int(doc["n_scenarios"]),
        n_hours=n_hours,
        entities=entities,
        cross_facet_rho=float(doc.get("cross_facet_rho", 0.0)),
        aggregate_grid=bool(doc.get("aggregate_grid", False)),
        seed=int(doc.get("seed", 0)) if seed is None else int(seed),
        day=days[0],
    )
    return spec, days


def outlier_plan_from_dict(doc) -> OutlierPlan:
    return OutlierPlan(
        entity=str(doc["entity"]),
        facet=str(doc["facet"]),
        sigma=float(doc["sigma"]),
        outliers=tuple(
            PlantedOutlier(index=int(o["index"]), kind=str(o["kind"]),
                           amount=float(o["amount"]))
            for o in doc.get("plant", [])
        ),
    )


def outcome_link_from_dict(doc) -> OutcomeLink:
    return OutcomeLink(
        metric=str(doc.get("metric", "cost")),
        kind=str(doc.get("kind", "affine")),
        scale=float(doc.get("scale", 1.0)),
        noise_sd=float(doc.get("noise_sd", 0.0)),
        threshold_quantile=float(doc.get("threshold_quantile", 0.9)),
        zone=doc.get("zone"),
        zone_facet=str(doc.get("zone_facet", "net_load")),
    )

"""HTTP service wrapping the library for long-running, multi-client use.

Each endpoint takes one day's ensemble inline (entity -> facet -> N x T
matrix) and returns the same structures the CLI writes to report files.
Domain errors map to 400 (bad input data) and 409 (config cannot run
against the data); request-shape errors get FastAPI's usual 422.
"""

from __future__ import annotations

import datetime
from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .depth import DepthComputationError, METRICS
from .ensemble import (
    EnsembleValidationError,
    MissingFacetError,
    ScenarioEnsemble,
    TiePolicy,
    derive_facet,
)
from .evaluation import (
    EvaluationError,
    EDOutcomes,
    LabelRule,
    TARGET_TO_OUTCOME,
    score_day,
)
from .fileio import selection_document
from .screening import (
    ConfigError,
    DepthSpec,
    InfeasibleError,
    PRESET_NAMES,
    PipelineConfig,
    preset,
    run_pipeline,
)
from .synthetic import (
    GeneratorError,
    generate_ensemble,
    generator_spec_from_dict,
    outcome_link_from_dict,
    outlier_plan_from_dict,
    plant_outliers,
    synth_outcomes,
)
from .workflows import resolve_label_rule

_INPUT_ERRORS = (EnsembleValidationError, EvaluationError, GeneratorError)
_CONFIG_ERRORS = (ConfigError, InfeasibleError, MissingFacetError, DepthComputationError)


class EnsemblePayload(BaseModel):
    """One day's scenario curves: entity -> base facet -> N x T matrix (MWh)."""

    day: datetime.date
    entities: dict[str, dict[str, list[list[float]]]]

    def to_ensemble(self) -> ScenarioEnsemble:
        base = {
            (entity, facet): matrix
            for entity, facets in self.entities.items()
            for facet, matrix in facets.items()
        }
        return ScenarioEnsemble(self.day, base)

    @classmethod
    def from_ensemble(cls, ens: ScenarioEnsemble) -> "EnsemblePayload":
        entities: dict[str, dict[str, list[list[float]]]] = {}
        for (entity, facet), fm in sorted(ens._base.items()):
            entities.setdefault(entity, {})[facet] = fm.values.tolist()
        return cls(day=ens.day, entities=entities)


class OutcomesPayload(BaseModel):
    """One day's outcome matrices: metric -> N x T matrix."""

    day: datetime.date
    metrics: dict[str, list[list[float]]]

    def to_outcomes(self) -> EDOutcomes:
        return EDOutcomes(self.day, self.metrics)


class DepthRequest(BaseModel):
    ensemble: EnsemblePayload
    entity: str = "grid"
    facet: str = "net_load"
    metric: str = "EXD"
    tie_policy: str = TiePolicy.ORDINAL_BY_INDEX.value
    seed: int = 0
    k: int = Field(default=50, description="random projection count (RTD)")
    bandwidth: Optional[float] = Field(default=None, description="HMD bandwidth; None = auto")
    one_sided: bool = False


class DepthResponse(BaseModel):
    metric: str
    entity: str
    facet: str
    orientation: str
    scores: list[float]
    outlying_order: list[int]
    params: dict


class ScreenRequest(BaseModel):
    ensemble: EnsemblePayload
    config: dict = Field(description="pipeline config document, or {'preset': name, ...overrides}")


class ScreenResponse(BaseModel):
    day: datetime.date
    indices: list[int]
    outlyingness_scores: list[float]
    stage_log: dict
    config: dict


class EvaluateRequest(BaseModel):
    ensemble: EnsemblePayload
    outcomes: OutcomesPayload
    config: dict
    label_rule: Optional[dict] = None


class EvaluateResponse(BaseModel):
    day: datetime.date
    indices: list[int]
    stage_log: dict
    label_rule: dict
    n_extreme: int
    n_selected: int
    count_accuracy: Optional[float]
    magnitude_accuracy: Optional[float]
    captured_mwh: float
    total_mwh: float


class SynthesizeRequest(BaseModel):
    spec: dict = Field(description="generator spec document (same schema as the CLI)")
    seed: Optional[int] = None
    include_outcomes: bool = False


class SynthesizeResponse(BaseModel):
    ensemble: EnsemblePayload
    outcomes: Optional[OutcomesPayload] = None


def _config_from_doc(doc: dict) -> PipelineConfig:
    return PipelineConfig.from_dict(doc)


def create_app() -> FastAPI:
    app = FastAPI(
        title="depthscreen",
        version=__version__,
        description="Functional-depth ranking and extreme-scenario screening "
                    "for day-ahead grid planning ensembles.",
    )

    def guard(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _CONFIG_ERRORS as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except _INPUT_ERRORS as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.get("/v1/presets")
    def presets():
        return {name: preset(name).to_dict() for name in PRESET_NAMES}

    @app.get("/v1/metrics")
    def metrics():
        return {"metrics": list(METRICS)}

    @app.post("/v1/depth", response_model=DepthResponse)
    def depth(req: DepthRequest):
        def work():
            ens = req.ensemble.to_ensemble()
            fm = derive_facet(ens, req.entity, req.facet)
            spec = DepthSpec(
                metric=req.metric,
                tie_policy=TiePolicy(req.tie_policy),
                bandwidth="auto" if req.bandwidth is None else req.bandwidth,
                k=req.k, seed=req.seed, one_sided=req.one_sided,
            )
            result = spec.compute(fm)
            return DepthResponse(
                metric=result.metric, entity=req.entity, facet=req.facet,
                orientation=result.orientation.value,
                scores=[float(s) for s in result.scores],
                outlying_order=[int(i) for i in result.outlying_order],
                params=result.params.to_dict(),
            )

        return guard(work)

    @app.post("/v1/screen", response_model=ScreenResponse)
    def screen(req: ScreenRequest):
        def work():
            ens = req.ensemble.to_ensemble()
            cfg = _config_from_doc(req.config)
            sel = run_pipeline(ens, cfg)
            return ScreenResponse(
                day=sel.day,
                indices=[int(i) for i in sel.indices],
                outlyingness_scores=[float(s) for s in sel.scores],
                stage_log=sel.stage_log.to_dict(),
                config=cfg.to_dict(),
            )

        return guard(work)

    @app.post("/v1/evaluate", response_model=EvaluateResponse)
    def evaluate(req: EvaluateRequest):
        def work():
            ens = req.ensemble.to_ensemble()
            outcomes = req.outcomes.to_outcomes()
            cfg = _config_from_doc(req.config)
            rule = resolve_label_rule(
                cfg,
                LabelRule.from_dict(req.label_rule) if req.label_rule else None,
                ens.n_scenarios,
            )
            sel = run_pipeline(ens, cfg)
            score = score_day(outcomes, TARGET_TO_OUTCOME[cfg.target], rule, sel.indices)
            return EvaluateResponse(
                day=sel.day,
                indices=[int(i) for i in sel.indices],
                stage_log=sel.stage_log.to_dict(),
                label_rule=rule.to_dict(),
                n_extreme=score.n_extreme,
                n_selected=score.n_selected,
                count_accuracy=score.count_accuracy,
                magnitude_accuracy=score.magnitude_accuracy,
                captured_mwh=score.captured_mwh,
                total_mwh=score.total_mwh,
            )

        return guard(work)

    @app.post("/v1/synthesize", response_model=SynthesizeResponse)
    def synthesize(req: SynthesizeRequest):
        def work():
            spec, _days = generator_spec_from_dict(req.spec, seed=req.seed)
            ens = generate_ensemble(spec)
            if req.spec.get("outliers"):
                ens = plant_outliers(ens, outlier_plan_from_dict(req.spec["outliers"]))
            outcomes = None
            if req.include_outcomes:
                link = outcome_link_from_dict(req.spec.get("link", {}))
                oc = synth_outcomes(ens, link, seed=spec.seed)
                outcomes = OutcomesPayload(
                    day=oc.day,
                    metrics={m: v.tolist() for m, v in sorted(oc.metrics.items())},
                )
            return SynthesizeResponse(
                ensemble=EnsemblePayload.from_ensemble(ens), outcomes=outcomes,
            )

        return guard(work)

    return app


app = create_app()

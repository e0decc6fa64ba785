"""Multi-day drivers tying ensembles, pipelines and scoring together.

Days are independent, so runs can fan out over a thread pool; results are
keyed and emitted in day order regardless of completion order, keeping
reports byte-identical across thread counts.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from .depth import METRICS
from .evaluation import (
    TARGET_TO_OUTCOME,
    DayScore,
    EvaluationError,
    LabelRule,
    default_label_rule,
    score_day,
    summarize_days,
)
from .fileio import TABLE_LABEL_TO_METRIC, TABLE_METRIC_ORDER
from .screening import PipelineConfig, SelectionSet, run_pipeline


def _map_days(fn, days, threads):
    if threads <= 1 or len(days) <= 1:
        return {day: fn(day) for day in days}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {day: pool.submit(fn, day) for day in days}
        return {day: futures[day].result() for day in days}


def run_screen(ensembles, cfg: PipelineConfig, threads: int = 1):
    """Run one pipeline over every day; returns day -> SelectionSet."""
    days = sorted(ensembles)
    results = _map_days(lambda day: run_pipeline(ensembles[day], cfg), days, threads)
    return {day: results[day] for day in days}


def _with_metric(cfg: PipelineConfig, metric: str) -> PipelineConfig:
    if cfg.seasonal is not None:
        seasonal = replace(
            cfg.seasonal,
            warm=_with_metric(cfg.seasonal.warm, metric),
            cold=_with_metric(cfg.seasonal.cold, metric),
        )
        return replace(cfg, seasonal=seasonal)
    if cfg.depth is None:
        return cfg
    return replace(cfg, depth=replace(cfg.depth, metric=metric))


def _has_depth_stage(cfg: PipelineConfig) -> bool:
    if cfg.seasonal is not None:
        return _has_depth_stage(cfg.seasonal.warm) or _has_depth_stage(cfg.seasonal.cold)
    return cfg.depth is not None


def resolve_label_rule(cfg: PipelineConfig, label_rule, n_scenarios: int) -> LabelRule:
    if label_rule is not None:
        return label_rule
    return default_label_rule(cfg.target, n_scenarios)


def run_eval(ensembles, outcomes, cfg: PipelineConfig, label_rule: LabelRule | None = None,
             metrics=None, threads: int = 1):
    """Screen and score each day, sweeping the depth metric.

    When the config has a depth stage, the pipeline is re-run once per
    metric (table order) so the summary compares all eight under identical
    staging; a depth-free config yields a single "AUC" column. Returns
    ``(label_rule, per_metric)`` where per_metric maps a table label to
    ``{"days": [(DayScore, SelectionSet)], "summary": DaySummary}``.
    """
    days = sorted(ensembles)
    missing = [d for d in days if d not in outcomes]
    if missing:
        raise EvaluationError(
            f"no outcomes for day(s): {', '.join(d.isoformat() for d in missing)}"
        )
    outcome_metric = TARGET_TO_OUTCOME[cfg.target]
    rule = resolve_label_rule(cfg, label_rule, ensembles[days[0]].n_scenarios)

    if _has_depth_stage(cfg):
        labels = list(TABLE_METRIC_ORDER) if metrics is None else list(metrics)
        configs = {label: _with_metric(cfg, TABLE_LABEL_TO_METRIC.get(label, label))
                   for label in labels}
    else:
        configs = {"AUC": cfg}

    def eval_day(day):
        ens = ensembles[day]
        oc = outcomes[day]
        out = {}
        for label, metric_cfg in configs.items():
            sel = run_pipeline(ens, metric_cfg)
            score = score_day(oc, outcome_metric, rule, sel.indices)
            out[label] = (score, sel)
        return out

    by_day = _map_days(eval_day, days, threads)
    per_metric = {}
    for label in configs:
        day_blocks = [by_day[day][label] for day in days]
        per_metric[label] = {
            "days": day_blocks,
            "summary": summarize_days([score for score, _ in day_blocks]),
        }
    return rule, per_metric

"""Scoring selections against dispatch-outcome ground truth.

Outcomes are per-scenario hourly operational results (cost, reserve
shortfall, load shed, curtailment). A labeling rule turns one outcome's
daily totals into the ground-truth extreme set; selections are then scored
by count accuracy (fraction of extreme scenarios captured) and by
magnitude-weighted accuracy (fraction of extreme MWh captured). Days with
no extreme scenarios are "not applicable" and return None rather than a
number, and the day summaries skip them.
"""

from __future__ import annotations

import datetime
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

#: Outcome matrix keys, matching the outcome file format.
OUTCOME_METRICS = ("cost", "reserve_shortfall", "load_shed", "vre_curtailment")

#: Pipeline target -> outcome matrix key.
TARGET_TO_OUTCOME = {
    "cost": "cost",
    "reserves_shortfall": "reserve_shortfall",
    "load_shedding": "load_shed",
    "vre_curtailment": "vre_curtailment",
}

#: Daily curtailment (MWh) at or above which a scenario counts as extreme.
VC_EXTREME_MWH = 100.0

#: Fraction of scenarios labeled extreme for continuous outcomes (cost, RS).
TOP_FRACTION = 0.05


class EvaluationError(ValueError):
    """Inputs unusable for scoring (shape mismatch, bad rule)."""


class EDOutcomes:
    """Per-scenario hourly outcomes for one day.

    Parameters
    ----------
    day : datetime.date
    metrics : mapping str -> array_like
        Any subset of `OUTCOME_METRICS`; each an N x T non-negative matrix
        (cost in currency units, the rest MWh).
    """

    def __init__(self, day, metrics):
        if not isinstance(day, datetime.date) or isinstance(day, datetime.datetime):
            raise EvaluationError(f"day must be a datetime.date, got {type(day).__name__}")
        if not metrics:
            raise EvaluationError("outcomes need at least one metric matrix")
        store = {}
        shape = None
        for name, values in metrics.items():
            if name not in OUTCOME_METRICS:
                raise EvaluationError(f"unknown outcome metric {name!r}; expected one of {OUTCOME_METRICS}")
            arr = np.ascontiguousarray(values, dtype=np.float64)
            if arr.ndim != 2:
                raise EvaluationError(f"outcome {name!r} must be 2-D, got shape {arr.shape}")
            if not np.isfinite(arr).all():
                raise EvaluationError(f"outcome {name!r} contains NaN or infinite entries")
            if (arr < 0).any():
                raise EvaluationError(f"outcome {name!r} contains negative values")
            if shape is None:
                shape = arr.shape
            elif arr.shape != shape:
                raise EvaluationError(
                    f"outcome {name!r} has shape {arr.shape}, expected {shape}"
                )
            arr.setflags(write=False)
            store[name] = arr
        self.day = day
        self.metrics = store
        self.n_scenarios, self.n_hours = shape

    def daily_totals(self, metric: str) -> np.ndarray:
        if metric not in self.metrics:
            raise EvaluationError(
                f"no {metric!r} outcomes for {self.day} (has: {sorted(self.metrics)})"
            )
        return self.metrics[metric].sum(axis=1)


@dataclass(frozen=True)
class LabelRule:
    """How daily totals define the extreme set.

    kind "top_m": exactly m largest totals (ties by scenario index);
    kind "positive": any strictly positive total;
    kind "threshold": total >= threshold.
    """

    kind: str
    m: Optional[int] = None
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("top_m", "positive", "threshold"):
            raise EvaluationError(f"unknown label rule {self.kind!r}")
        if self.kind == "top_m" and (self.m is None or self.m < 1):
            raise EvaluationError("top_m rule needs m >= 1")
        if self.kind == "threshold" and self.threshold is None:
            raise EvaluationError("threshold rule needs a threshold")

    def to_dict(self):
        out = {"kind": self.kind}
        if self.m is not None:
            out["m"] = self.m
        if self.threshold is not None:
            out["threshold"] = self.threshold
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(kind=str(d["kind"]),
                   m=None if d.get("m") is None else int(d["m"]),
                   threshold=None if d.get("threshold") is None else float(d["threshold"]))


def default_label_rule(target: str, n_scenarios: int) -> LabelRule:
    """Per-target convention: top 5% for cost and reserves shortfall, any
    positive shed for load shedding, >= 100 MWh daily for curtailment."""
    if target in ("cost", "reserves_shortfall"):
        return LabelRule("top_m", m=max(1, math.ceil(TOP_FRACTION * n_scenarios)))
    if target == "load_shedding":
        return LabelRule("positive")
    if target == "vre_curtailment":
        return LabelRule("threshold", threshold=VC_EXTREME_MWH)
    raise EvaluationError(f"unknown target {target!r}")


@dataclass(frozen=True)
class ExtremeLabel:
    """Ground-truth extreme set for one (day, outcome metric, rule)."""

    metric: str
    rule: LabelRule
    extreme_set: frozenset[int]


def label_extremes(outcomes: EDOutcomes, metric: str, rule: LabelRule) -> ExtremeLabel:
    totals = outcomes.daily_totals(metric)
    n = totals.shape[0]
    if rule.kind == "top_m":
        if rule.m > n:
            raise EvaluationError(f"top_m={rule.m} exceeds N={n}")
        order = np.lexsort((np.arange(n), -totals))
        chosen = frozenset(int(i) for i in order[: rule.m])
    elif rule.kind == "positive":
        chosen = frozenset(int(i) for i in np.flatnonzero(totals > 0.0))
    else:
        chosen = frozenset(int(i) for i in np.flatnonzero(totals >= rule.threshold))
    return ExtremeLabel(metric=metric, rule=rule, extreme_set=chosen)


# ---------------------------------------------------------------------------
# accuracy statistics
# ---------------------------------------------------------------------------

def count_accuracy(extreme, selected) -> Optional[float]:
    """|E intersect O| / |E|; None when there are no extreme scenarios."""
    e = set(int(i) for i in extreme)
    if not e:
        return None
    o = set(int(i) for i in selected)
    return len(e & o) / len(e)


def magnitude_accuracy(extreme, selected, outcome_matrix) -> Optional[float]:
    """Fraction of the extreme scenarios' total outcome captured by the selection.

    The numerator sums daily totals over the captured extreme scenarios
    (selected AND extreme), so the ratio stays in [0, 1] even when
    sub-threshold scenarios carry nonzero outcome. None when the extreme
    total is zero.
    """
    e = set(int(i) for i in extreme)
    if not e:
        return None
    x = np.ascontiguousarray(outcome_matrix, dtype=np.float64)
    totals = x.sum(axis=1)
    denom = float(sum(totals[i] for i in sorted(e)))
    if denom <= 0.0:
        return None
    captured = e & set(int(i) for i in selected)
    num = float(sum(totals[i] for i in sorted(captured)))
    return num / denom


def kendall_tau(a, b) -> Optional[float]:
    """Tie-corrected (tau-b) Kendall rank correlation.

    Counts concordant/discordant pairs exactly (vectorized over all N^2
    pairs), so it matches a literal pair loop bit for bit. Returns None
    when either input is constant.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise EvaluationError("kendall_tau needs two equal-length 1-D vectors")
    n = a.shape[0]
    if n < 2:
        raise EvaluationError("kendall_tau needs at least 2 observations")
    sa = np.sign(a[:, None] - a[None, :])
    sb = np.sign(b[:, None] - b[None, :])
    prod = sa * sb
    iu = np.triu_indices(n, k=1)
    concordant = int((prod[iu] > 0).sum())
    discordant = int((prod[iu] < 0).sum())
    ties_a = int((sa[iu] == 0).sum())
    ties_b = int((sb[iu] == 0).sum())
    n0 = n * (n - 1) // 2
    denom_a = n0 - ties_a
    denom_b = n0 - ties_b
    if denom_a == 0 or denom_b == 0:
        return None
    return (concordant - discordant) / math.sqrt(denom_a * denom_b)


def spearman_rho(a, b) -> Optional[float]:
    """Pearson correlation of midranks. None when either input is constant."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise EvaluationError("spearman_rho needs two equal-length 1-D vectors")

    def midranks(x):
        n = x.shape[0]
        order = np.argsort(x, kind="stable")
        ranks = np.empty(n)
        sx = x[order]
        start = 0
        for i in range(1, n + 1):
            if i == n or sx[i] != sx[start]:
                ranks[order[start:i]] = (start + 1 + i) / 2.0
                start = i
        return ranks

    ra, rb = midranks(a), midranks(b)
    ra -= ra.mean()
    rb -= rb.mean()
    denom = math.sqrt(float((ra * ra).sum()) * float((rb * rb).sum()))
    if denom == 0.0:
        return None
    return float((ra * rb).sum()) / denom


# ---------------------------------------------------------------------------
# per-day records and summaries
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DayScore:
    """One day's scoring of one selection against one outcome."""

    day: datetime.date
    n_extreme: int
    n_selected: int
    count_accuracy: Optional[float]
    magnitude_accuracy: Optional[float]
    captured_mwh: float
    total_mwh: float

    def to_dict(self):
        return {
            "day": self.day.isoformat(),
            "n_extreme": self.n_extreme,
            "n_selected": self.n_selected,
            "count_accuracy": self.count_accuracy,
            "magnitude_accuracy": self.magnitude_accuracy,
            "captured_mwh": self.captured_mwh,
            "total_mwh": self.total_mwh,
        }


def score_day(outcomes: EDOutcomes, metric: str, rule: LabelRule, selected) -> DayScore:
    label = label_extremes(outcomes, metric, rule)
    totals = outcomes.daily_totals(metric)
    e = label.extreme_set
    o = set(int(i) for i in selected)
    captured = float(sum(totals[i] for i in sorted(e & o)))
    total = float(sum(totals[i] for i in sorted(e)))
    return DayScore(
        day=outcomes.day,
        n_extreme=len(e),
        n_selected=len(o),
        count_accuracy=count_accuracy(e, o),
        magnitude_accuracy=magnitude_accuracy(e, o, outcomes.metrics[metric]),
        captured_mwh=captured,
        total_mwh=total,
    )


@dataclass(frozen=True)
class DaySummary:
    """Min/median/average/max of the per-day count accuracy, plus magnitude totals."""

    n_days: int
    n_scored: int
    min: Optional[float]
    median: Optional[float]
    avg: Optional[float]
    max: Optional[float]
    captured_mwh: float
    total_mwh: float

    @property
    def magnitude_fraction(self) -> Optional[float]:
        if self.total_mwh <= 0.0:
            return None
        return self.captured_mwh / self.total_mwh

    def to_dict(self):
        return {
            "n_days": self.n_days,
            "n_scored": self.n_scored,
            "count_accuracy": {"min": self.min, "median": self.median,
                               "avg": self.avg, "max": self.max},
            "captured_mwh": self.captured_mwh,
            "total_mwh": self.total_mwh,
            "magnitude_fraction": self.magnitude_fraction,
        }


def summarize_days(records) -> DaySummary:
    """Aggregate per-day scores; days with no extreme scenarios are skipped."""
    records = list(records)
    if not records:
        raise EvaluationError("summary needs at least one day")
    scored = [r.count_accuracy for r in records if r.count_accuracy is not None]
    captured = float(sum(r.captured_mwh for r in records))
    total = float(sum(r.total_mwh for r in records))
    if scored:
        arr = np.asarray(scored, dtype=np.float64)
        stats = (float(arr.min()), float(np.median(arr)), float(arr.mean()), float(arr.max()))
    else:
        stats = (None, None, None, None)
    return DaySummary(
        n_days=len(records), n_scored=len(scored),
        min=stats[0], median=stats[1], avg=stats[2], max=stats[3],
        captured_mwh=captured, total_mwh=total,
    )

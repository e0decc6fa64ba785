"""Wide-CSV scenario/outcome files and deterministic report writers.

Scenario files carry one row per (day, scenario, entity, facet) with hour
columns h01..hT; outcome files swap the facet column for an outcome metric.
Values round-trip bit-exactly (shortest round-trip decimals on write), and
writers emit rows in a canonical order so identical inputs produce
byte-identical files. Reports never embed timestamps for the same reason.
"""

from __future__ import annotations

import csv
import datetime
import json
from typing import Optional

import numpy as np

from .ensemble import BASE_FACETS, ScenarioEnsemble, EnsembleValidationError
from .evaluation import OUTCOME_METRICS, DayScore, DaySummary, EDOutcomes

#: Report column order for the per-metric summary grid.
TABLE_METRIC_ORDER = ("ID", "MBD", "EXD", "ERD", "LID", "HMD", "DQ", "RTD")

#: Table label -> internal metric id (the rank-length metric prints as ERD).
TABLE_LABEL_TO_METRIC = {label: ("ERLD" if label == "ERD" else label)
                         for label in TABLE_METRIC_ORDER}

SCENARIO_KEY_COLUMNS = ("day", "scenario", "entity", "facet")
OUTCOME_KEY_COLUMNS = ("day", "scenario", "entity", "metric")


class SchemaError(ValueError):
    """Malformed input file; message carries file and line context."""


def _hour_columns(n_hours: int) -> list[str]:
    return [f"h{h:02d}" for h in range(1, n_hours + 1)]


def _fmt(value: float) -> str:
    # repr gives the shortest decimal that round-trips to the same float
    return repr(float(value))


def _check_header(path, header, key_columns, n_hours):
    expected = list(key_columns) + _hour_columns(n_hours)
    if header is None:
        raise SchemaError(f"{path}: empty file, expected header {','.join(expected)}")
    missing = [c for c in expected if c not in header]
    if missing:
        raise SchemaError(f"{path}: line 1: missing column(s): {', '.join(missing)}")
    extra = [c for c in header if c not in expected]
    if extra:
        raise SchemaError(f"{path}: line 1: unexpected column(s): {', '.join(extra)}")
    return {name: header.index(name) for name in expected}


def _parse_rows(path, key_columns, kind_field, valid_kinds, n_hours):
    """Shared row parser for scenario and outcome files.

    Yields (day, scenario, entity, kind, hours-vector); raises SchemaError
    with line numbers on any malformed content.
    """
    rows = {}
    hour_cols = _hour_columns(n_hours)
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            header = None
        col = _check_header(path, header, key_columns, n_hours)
        for lineno, record in enumerate(reader, start=2):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue
            if len(record) != len(header):
                raise SchemaError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(record)}"
                )
            try:
                day = datetime.date.fromisoformat(record[col["day"]])
            except ValueError:
                raise SchemaError(
                    f"{path}: line {lineno}: bad day {record[col['day']]!r} (expected ISO-8601)"
                ) from None
            try:
                scenario = int(record[col["scenario"]])
            except ValueError:
                raise SchemaError(
                    f"{path}: line {lineno}: bad scenario id {record[col['scenario']]!r}"
                ) from None
            if scenario < 0:
                raise SchemaError(f"{path}: line {lineno}: scenario id must be >= 0")
            entity = record[col["entity"]].strip()
            if not entity:
                raise SchemaError(f"{path}: line {lineno}: empty entity")
            kind = record[col[kind_field]].strip()
            if kind not in valid_kinds:
                raise SchemaError(
                    f"{path}: line {lineno}: bad {kind_field} {kind!r} "
                    f"(expected one of {', '.join(valid_kinds)})"
                )
            values = np.empty(n_hours)
            for hi, name in enumerate(hour_cols):
                raw = record[col[name]]
                try:
                    values[hi] = float(raw)
                except ValueError:
                    raise SchemaError(
                        f"{path}: line {lineno}: bad number {raw!r} in {name}"
                    ) from None
            if not np.isfinite(values).all():
                raise SchemaError(f"{path}: line {lineno}: non-finite value")
            if (values < 0).any():
                raise SchemaError(f"{path}: line {lineno}: negative value")
            key = (day, scenario, entity, kind)
            if key in rows:
                raise SchemaError(
                    f"{path}: line {lineno}: duplicate row for "
                    f"(day={day}, scenario={scenario}, entity={entity}, {kind_field}={kind})"
                )
            rows[key] = values
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _group_matrices(path, rows, kind_field):
    """day -> (entity, kind) -> N x T matrix, with ragged/gap checks."""
    per_day: dict = {}
    for (day, scenario, entity, kind), values in rows.items():
        per_day.setdefault(day, {}).setdefault((entity, kind), {})[scenario] = values
    out = {}
    for day in sorted(per_day):
        groups = per_day[day]
        sizes = {key: len(scenarios) for key, scenarios in groups.items()}
        n = max(sizes.values())
        for (entity, kind), scenarios in sorted(groups.items()):
            if len(scenarios) != n:
                raise SchemaError(
                    f"{path}: day {day}: ({entity}, {kind}) has {len(scenarios)} scenarios "
                    f"but other series have {n} (ragged ensemble)"
                )
            missing = sorted(set(range(n)) - set(scenarios))
            if missing:
                raise SchemaError(
                    f"{path}: day {day}: ({entity}, {kind}) missing scenario id(s) "
                    f"{missing[:5]} (ids must be 0..N-1)"
                )
        out[day] = {
            key: np.vstack([scenarios[i] for i in range(n)])
            for key, scenarios in sorted(groups.items())
        }
    return out


def load_scenarios(path, n_hours: int = 24) -> dict[datetime.date, ScenarioEnsemble]:
    """Read a scenario CSV into one ensemble per day (keyed, sorted by day)."""
    rows = _parse_rows(path, SCENARIO_KEY_COLUMNS, "facet", BASE_FACETS, n_hours)
    grouped = _group_matrices(path, rows, "facet")
    out = {}
    for day, matrices in grouped.items():
        try:
            out[day] = ScenarioEnsemble(day, matrices)
        except EnsembleValidationError as exc:
            raise SchemaError(f"{path}: day {day}: {exc}") from None
    return out


def write_scenarios(path, ensembles) -> None:
    """Write ensembles in canonical row order (day, entity, facet, scenario)."""
    if isinstance(ensembles, ScenarioEnsemble):
        ensembles = {ensembles.day: ensembles}
    days = sorted(ensembles)
    n_hours = ensembles[days[0]].n_hours
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(SCENARIO_KEY_COLUMNS) + _hour_columns(n_hours))
        for day in days:
            ens = ensembles[day]
            for (entity, facet) in sorted(ens._base):
                values = ens._base[(entity, facet)].values
                for scenario in range(ens.n_scenarios):
                    writer.writerow(
                        [day.isoformat(), scenario, entity, facet]
                        + [_fmt(v) for v in values[scenario]]
                    )


def load_outcomes(path, n_hours: int = 24) -> dict[datetime.date, EDOutcomes]:
    """Read an outcome CSV into one EDOutcomes per day.

    The entity column must be "grid" (outcomes are system totals)."""
    rows = _parse_rows(path, OUTCOME_KEY_COLUMNS, "metric", OUTCOME_METRICS, n_hours)
    for (day, scenario, entity, metric) in rows:
        if entity != "grid":
            raise SchemaError(
                f"{path}: outcome rows must use entity 'grid', found {entity!r} on day {day}"
            )
    grouped = _group_matrices(path, rows, "metric")
    out = {}
    for day, matrices in grouped.items():
        out[day] = EDOutcomes(day, {metric: values for (_, metric), values in matrices.items()})
    return out


def write_outcomes(path, outcomes_by_day) -> None:
    if isinstance(outcomes_by_day, EDOutcomes):
        outcomes_by_day = {outcomes_by_day.day: outcomes_by_day}
    days = sorted(outcomes_by_day)
    n_hours = outcomes_by_day[days[0]].n_hours
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(list(OUTCOME_KEY_COLUMNS) + _hour_columns(n_hours))
        for day in days:
            oc = outcomes_by_day[day]
            for metric in sorted(oc.metrics):
                values = oc.metrics[metric]
                for scenario in range(oc.n_scenarios):
                    writer.writerow(
                        [day.isoformat(), scenario, "grid", metric]
                        + [_fmt(v) for v in values[scenario]]
                    )


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def dump_json(document) -> str:
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(document, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def write_json_report(path, document) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_json(document))


def selection_document(selections, config) -> dict:
    """JSON document for a screen run: indices, scores and stage logs per day."""
    days = []
    for day in sorted(selections):
        sel = selections[day]
        entry = {
            "day": day.isoformat(),
            "indices": [int(i) for i in sel.indices],
            "outlyingness_scores": [float(s) for s in sel.scores],
            "stage_log": sel.stage_log.to_dict(),
        }
        days.append(entry)
    return {"schema": "depthscreen.selection.v1", "config": config.to_dict(), "days": days}


def eval_document(config, label_rule, per_metric) -> dict:
    """JSON document for an eval run.

    `per_metric` maps a table label (or "AUC") to
    ``{"days": [(DayScore, SelectionSet)], "summary": DaySummary}``.
    """
    metrics_block = {}
    for label in sorted(per_metric):
        block = per_metric[label]
        day_entries = []
        for score, sel in block["days"]:
            entry = score.to_dict()
            entry["indices"] = [int(i) for i in sel.indices]
            entry["stage_log"] = sel.stage_log.to_dict()
            day_entries.append(entry)
        metrics_block[label] = {
            "days": day_entries,
            "summary": block["summary"].to_dict(),
        }
    return {
        "schema": "depthscreen.eval.v1",
        "config": config.to_dict(),
        "label_rule": label_rule.to_dict(),
        "metrics": metrics_block,
    }


def _csv_cell(value: Optional[float]) -> str:
    return "" if value is None else _fmt(value)


def eval_summary_csv(per_metric) -> str:
    """Summary grid: one column per metric, statistics as rows.

    Accuracy statistics are percentages; magnitude rows are GWh totals.
    Column order follows the canonical table layout when the depth metrics
    were swept, otherwise whatever labels are present (e.g. just AUC).
    """
    labels = [m for m in TABLE_METRIC_ORDER if m in per_metric]
    labels += [m for m in sorted(per_metric) if m not in TABLE_METRIC_ORDER]
    lines = ["statistic," + ",".join(labels)]
    summaries = {label: per_metric[label]["summary"] for label in labels}

    def pct(x):
        return None if x is None else 100.0 * x

    rows = [
        ("min_pct", lambda s: pct(s.min)),
        ("median_pct", lambda s: pct(s.median)),
        ("avg_pct", lambda s: pct(s.avg)),
        ("max_pct", lambda s: pct(s.max)),
        ("captured_gwh", lambda s: s.captured_mwh / 1000.0),
        ("total_gwh", lambda s: s.total_mwh / 1000.0),
        ("magnitude_pct", lambda s: pct(s.magnitude_fraction)),
    ]
    for name, getter in rows:
        lines.append(name + "," + ",".join(_csv_cell(getter(summaries[l])) for l in labels))
    return "\n".join(lines) + "\n"


def write_eval_csv(path, per_metric) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(eval_summary_csv(per_metric))


def depth_document(metric, days_block) -> dict:
    return {"schema": "depthscreen.depth.v1", "metric": metric, "days": days_block}

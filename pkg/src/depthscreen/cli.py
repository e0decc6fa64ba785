"""Command-line surface: depth, screen, eval, synth (plus serve).

The CLI is a thin client of the library; every command loads files, calls
the corresponding workflow and writes a deterministic report. Exit codes:
0 success, 1 input/schema error, 2 config infeasibility.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .depth import DepthComputationError, METRICS
from .ensemble import EnsembleValidationError, MissingFacetError, TiePolicy, derive_facet
from .evaluation import EvaluationError, LabelRule
from .fileio import (
    SchemaError,
    depth_document,
    dump_json,
    eval_document,
    load_outcomes,
    load_scenarios,
    selection_document,
    write_eval_csv,
    write_json_report,
    write_outcomes,
    write_scenarios,
)
from .screening import (
    ConfigError,
    DepthSpec,
    InfeasibleError,
    PRESET_NAMES,
    PipelineConfig,
    preset,
)
from .synthetic import (
    GeneratorError,
    generate_days,
    generator_spec_from_dict,
    outcome_link_from_dict,
    outlier_plan_from_dict,
    plant_outliers,
    synth_outcomes,
)
from .workflows import run_eval, run_screen

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2

_INPUT_ERRORS = (SchemaError, EnsembleValidationError, EvaluationError,
                 GeneratorError, FileNotFoundError, json.JSONDecodeError)
_CONFIG_ERRORS = (ConfigError, InfeasibleError, MissingFacetError, DepthComputationError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage is an input error
        raise _UsageError(message)


def read_config(value: str):
    """Config from a preset name or a JSON file; returns (config, label_rule)."""
    if value in PRESET_NAMES:
        return preset(value), None
    path = Path(value)
    if not path.exists():
        raise ConfigError(
            f"{value!r} is neither a preset ({', '.join(PRESET_NAMES)}) nor a config file"
        )
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    label_rule = LabelRule.from_dict(doc["label_rule"]) if doc.get("label_rule") else None
    return PipelineConfig.from_dict(doc), label_rule


def _cmd_depth(args) -> int:
    ensembles = load_scenarios(args.scenarios, n_hours=args.hours)
    spec = DepthSpec(
        metric=args.metric.upper(),
        tie_policy=TiePolicy(args.tie_policy),
        bandwidth="auto" if args.bandwidth is None else args.bandwidth,
        k=args.k,
        seed=args.seed,
        one_sided=args.one_sided,
    )
    days_block = []
    for day in sorted(ensembles):
        fm = derive_facet(ensembles[day], args.entity, args.facet)
        result = spec.compute(fm)
        days_block.append({
            "day": day.isoformat(),
            "entity": args.entity,
            "facet": args.facet,
            "orientation": result.orientation.value,
            "scores": [float(s) for s in result.scores],
            "outlying_order": [int(i) for i in result.outlying_order],
            "params": result.params.to_dict(),
        })
    write_json_report(args.out, depth_document(spec.metric, days_block))
    return EXIT_OK


def _cmd_screen(args) -> int:
    ensembles = load_scenarios(args.scenarios, n_hours=args.hours)
    cfg, _ = read_config(args.config)
    selections = run_screen(ensembles, cfg, threads=args.threads)
    write_json_report(args.out, selection_document(selections, cfg))
    return EXIT_OK


def _cmd_eval(args) -> int:
    ensembles = load_scenarios(args.scenarios, n_hours=args.hours)
    outcomes = load_outcomes(args.outcomes, n_hours=args.hours)
    cfg, label_rule = read_config(args.config)
    rule, per_metric = run_eval(ensembles, outcomes, cfg, label_rule=label_rule,
                                threads=args.threads)
    if args.format == "csv":
        write_eval_csv(args.out, per_metric)
    else:
        write_json_report(args.out, eval_document(cfg, rule, per_metric))
    return EXIT_OK


def _cmd_synth(args) -> int:
    with open(args.spec, encoding="utf-8") as handle:
        doc = json.load(handle)
    spec, days = generator_spec_from_dict(doc, seed=args.seed)
    ensembles = generate_days(spec, days)
    if doc.get("outliers"):
        plan = outlier_plan_from_dict(doc["outliers"])
        ensembles = {day: plant_outliers(ens, plan) for day, ens in ensembles.items()}
    write_scenarios(args.out, ensembles)
    if args.outcomes:
        link = outcome_link_from_dict(doc.get("link", {}))
        outcomes = {day: synth_outcomes(ens, link, seed=spec.seed)
                    for day, ens in ensembles.items()}
        write_outcomes(args.outcomes, outcomes)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depthscreen",
                     description="Rank day-ahead grid scenarios by functional depth "
                                 "and screen the likely-extreme subset.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--hours", type=int, default=24,
                       help="hour columns expected in CSV inputs (default 24)")

    p_depth = sub.add_parser("depth", help="per-scenario depth scores for one facet")
    p_depth.add_argument("--scenarios", required=True)
    p_depth.add_argument("--entity", default="grid")
    p_depth.add_argument("--facet", default="net_load")
    p_depth.add_argument("--metric", required=True,
                         help=f"one of {', '.join(METRICS)} (case-insensitive)")
    p_depth.add_argument("--tie-policy", default="ordinal_by_index",
                         choices=[t.value for t in TiePolicy])
    p_depth.add_argument("--one-sided", action="store_true",
                         help="directional variant (MBD, ERLD, DQ only)")
    p_depth.add_argument("--seed", type=int, default=0, help="RTD projection seed")
    p_depth.add_argument("--k", type=int, default=50, help="RTD projection count")
    p_depth.add_argument("--bandwidth", type=float, default=None,
                         help="HMD bandwidth (default: auto)")
    p_depth.add_argument("--out", required=True)
    add_common(p_depth)
    p_depth.set_defaults(fn=_cmd_depth)

    p_screen = sub.add_parser("screen", help="run a selection pipeline or preset")
    p_screen.add_argument("--scenarios", required=True)
    p_screen.add_argument("--config", required=True,
                          help=f"preset name ({', '.join(PRESET_NAMES)}) or JSON file")
    p_screen.add_argument("--threads", type=int, default=1)
    p_screen.add_argument("--out", required=True)
    add_common(p_screen)
    p_screen.set_defaults(fn=_cmd_screen)

    p_eval = sub.add_parser("eval", help="screen and score against outcome ground truth")
    p_eval.add_argument("--scenarios", required=True)
    p_eval.add_argument("--outcomes", required=True)
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--format", choices=("json", "csv"), default="json")
    p_eval.add_argument("--threads", type=int, default=1)
    p_eval.add_argument("--out", required=True)
    add_common(p_eval)
    p_eval.set_defaults(fn=_cmd_eval)

    p_synth = sub.add_parser("synth", help="generate a synthetic ensemble (and labels)")
    p_synth.add_argument("--spec", required=True, help="generator spec JSON")
    p_synth.add_argument("--seed", type=int, default=None,
                         help="override the spec's seed")
    p_synth.add_argument("--out", required=True, help="scenario CSV to write")
    p_synth.add_argument("--outcomes", default=None,
                         help="also write synthetic outcome CSV here")
    p_synth.set_defaults(fn=_cmd_synth)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

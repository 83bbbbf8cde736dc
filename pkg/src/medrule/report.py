"""Batch pipeline: config parsing, end-to-end run, JSON/CSV artifacts.

The run config is a single JSON document; the pipeline is deterministic given
(config, seed) and emits a JSON report (timestamp aside), CSV audit files and
an SVG forest plot into the output directory.
"""
from __future__ import annotations

import json
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .crossfit import make_plan
from .data import ColumnSchema, Dataset, read_csv, validate_dataset, write_csv
from .effects import constant_rule, effect_table, estimated_rule
from .eif import NuisanceConfig, fit_nuisances, pseudo_contrast, shift_weight_values
from .errors import ConfigError, MedruleError
from .plot import render_forest_plot
from .subgroup import assign_subgroup, fit_blip, subgroup_summary

BLIP_METHODS = ("stack", "adaptive-lasso")


@dataclass(frozen=True)
class RunConfig:
    data: str
    schema: ColumnSchema
    folds: int = 5
    seed: int = 1
    stack: tuple[str, ...] = ("mean", "glm", "lasso")
    blip_methods: tuple[str, ...] = BLIP_METHODS
    epsilon: float = 0.01
    output_dir: str = "medrule-out"
    threads: int = 1
    z_value: float = 1.96

    def __post_init__(self):
        object.__setattr__(self, "stack", tuple(self.stack))
        object.__setattr__(self, "blip_methods", tuple(self.blip_methods))
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if not 0.0 < self.epsilon <= 0.2:
            raise ConfigError("epsilon must lie in (0, 0.2]")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not self.stack:
            raise ConfigError("the learner stack cannot be empty")
        unknown = set(self.blip_methods) - set(BLIP_METHODS)
        if unknown:
            raise ConfigError(f"unknown blip methods: {sorted(unknown)}")


def load_config(path) -> RunConfig:
    """Parse and validate a JSON run config (see README for the layout)."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        roles = doc["roles"]
        schema = ColumnSchema(
            baseline=tuple(roles["baseline"]),
            rule_covariates=tuple(roles["rule_covariates"]),
            treatment=roles["treatment"],
            post_treatment=roles["post_treatment"],
            mediators=tuple(roles["mediators"]),
            outcome=roles["outcome"],
            weight=roles.get("weight"),
            outcome_range=tuple(roles.get("outcome_range", (0.0, 1.0))),
            categorical_levels=roles.get("categorical_levels", {}),
        )
        return RunConfig(
            data=doc["data"], schema=schema,
            folds=int(doc.get("folds", 5)), seed=int(doc.get("seed", 1)),
            stack=tuple(doc.get("stack", ("mean", "glm", "lasso"))),
            blip_methods=tuple(doc.get("blip_methods", BLIP_METHODS)),
            epsilon=float(doc.get("epsilon", 0.01)),
            output_dir=doc.get("output_dir", "medrule-out"),
            threads=int(doc.get("threads", 1)),
            z_value=float(doc.get("z_value", 1.96)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad run config: {exc}") from exc


class PipelineError(MedruleError):
    def __init__(self, stage: str, error: Exception):
        super().__init__(f"[{stage}] {error}")
        self.stage = stage
        self.error = error


@contextmanager
def _stage(name: str):
    try:
        yield
    except (MedruleError, OSError) as exc:
        raise PipelineError(name, exc) from exc


def _pair_key(pair) -> str:
    return f"{pair[0]},{pair[1]}"


def run_pipeline(config: RunConfig, write: bool = True) -> dict:
    """Ingest, cross-fit, estimate and report; returns the report dict.

    Deterministic given (config, seed): rerunning yields byte-identical JSON
    apart from the timestamp field.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")

        with _stage("ingest"):
            dataset = validate_dataset(read_csv(config.data), config.schema)
        with _stage("crossfit"):
            plan = make_plan(dataset.n, config.folds, config.seed)
        with _stage("nuisances"):
            nuis_config = NuisanceConfig(stack=config.stack, epsilon=config.epsilon,
                                         seed=config.seed, threads=config.threads)
            fits = fit_nuisances(dataset, plan, nuis_config)
        with _stage("pseudo-outcomes"):
            pseudo = pseudo_contrast(dataset, fits)

        subgroups, assignments = {}, {}
        with _stage("subgroup"):
            for method in config.blip_methods:
                blip = fit_blip(pseudo, dataset, plan, method=method,
                                stack=config.stack, seed=config.seed)
                assignments[method] = assign_subgroup(blip, dataset)
                subgroups[method] = subgroup_summary(assignments[method], dataset)

        with _stage("effects"):
            rules = [constant_rule(1, "no-individualization")]
            rules += [estimated_rule(assignments[m], m) for m in config.blip_methods]
            table = effect_table(dataset, fits, rules, z_value=config.z_value)

    report = {
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "provenance": {
            "data": str(config.data), "seed": config.seed, "folds": config.folds,
            "stack": list(config.stack), "blip_methods": list(config.blip_methods),
            "epsilon": config.epsilon, "z_value": config.z_value,
        },
        "dataset": dataset.summary(),
        "diagnostics": {
            "clip_fractions": {k: float(v) for k, v in fits.clip_fractions.items()},
            "shift_weight_range": {
                _pair_key(p): {"min": float(shift_weight_values(dataset, fits, *p).min()),
                               "max": float(shift_weight_values(dataset, fits, *p).max())}
                for p in sorted(fits.u_vals)
            },
            "warnings": sorted({f"{w.category.__name__}: {w.message}" for w in caught}),
        },
        "subgroups": subgroups,
        "effects": [est.to_dict() for est in table],
    }

    if write:
        write_artifacts(report, dataset, fits, pseudo, assignments, table,
                        Path(config.output_dir))
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_artifacts(report, dataset: Dataset, fits, pseudo, assignments,
                    table, outdir: Path) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.json").write_text(report_json(report))
    effects_doc = [est.to_dict() for est in table]
    (outdir / "effects.json").write_text(
        json.dumps(effects_doc, indent=2, sort_keys=True) + "\n")

    rows = np.arange(dataset.n)
    write_csv(outdir / "fold_assignment.csv",
              {"row": rows, "fold": fits.plan.assignment})
    write_csv(outdir / "pseudo_outcomes.csv",
              {"row": rows, "fold": pseudo.fold, "d11": pseudo.d11,
               "d10": pseudo.d10, "d": pseudo.values})
    for method, asg in assignments.items():
        write_csv(outdir / f"subgroup_{method.replace('-', '_')}.csv",
                  {"row": rows, "blip": asg.blip, "harm": asg.harm,
                   "rule": asg.rule,
                   "provenance": [asg.provenance] * dataset.n})
    write_csv(outdir / "effects.csv",
              {k: [est.to_dict()[k] for est in table]
               for k in ("contrast", "rule", "estimate", "se",
                         "ci_low", "ci_high", "n", "folds")})
    (outdir / "forest.svg").write_text(render_forest_plot(effects_doc))

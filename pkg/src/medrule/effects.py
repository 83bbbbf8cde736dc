"""One-step estimation of population interventional effects under a rule.

Each contrast is a weighted mean of per-row pseudo-outcome differences, with
the pseudo-outcome instantiated at the row's own rule value; the standard
error is the weighted standard deviation of the same per-row contrast over
sqrt(n). Rows the rule leaves untreated contribute an exact zero to the
rule-dependent contrasts, since both arms coincide.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .eif import NuisanceFits, pseudo_outcome_values, shift_weight_values
from .errors import MissingArm, PositivityDiagnosticWarning
from .subgroup import SubgroupAssignment

CONTRASTS = ("indirect", "direct", "total", "piie", "pite")


@dataclass(frozen=True)
class RuleSpec:
    """A treatment decision per row: a constant arm or an estimated subgroup
    assignment."""

    kind: str
    label: str
    constant: int | None = None
    assignment: SubgroupAssignment | None = None

    def values(self, dataset: Dataset) -> np.ndarray:
        if self.kind == "constant":
            return np.full(dataset.n, self.constant, dtype=int)
        if len(self.assignment.rule) != dataset.n:
            raise ValueError("rule assignment does not match the dataset")
        return self.assignment.rule.astype(int)


def constant_rule(value: int, label: str | None = None) -> RuleSpec:
    if value not in (0, 1):
        raise ValueError("constant rules must be 0 or 1")
    return RuleSpec(kind="constant", label=label or f"constant-{value}",
                    constant=value)


def estimated_rule(assignment: SubgroupAssignment,
                   label: str | None = None) -> RuleSpec:
    return RuleSpec(kind="estimated", label=label or assignment.provenance,
                    assignment=assignment)


ARMS = {"indirect": "(d,d)-(d,0)", "direct": "(d,0)-(0,0)",
        "total": "(d,d)-(0,0)", "piie": "(1,1)-(1,0)", "pite": "(1,1)-(0,0)"}


@dataclass(frozen=True)
class EffectEstimate:
    contrast: str
    rule: str
    arms: str
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    n: int
    folds: int

    def to_dict(self) -> dict:
        return {"contrast": self.contrast, "rule": self.rule, "arms": self.arms,
                "estimate": self.estimate, "se": self.se,
                "ci_low": self.ci_low, "ci_high": self.ci_high,
                "n": self.n, "folds": self.folds}


def _pair_values(dataset, fits, pair) -> np.ndarray:
    if pair not in fits.u_vals:
        raise MissingArm(pair)
    return pseudo_outcome_values(dataset, fits, *pair)


def _row_contrast(dataset: Dataset, fits: NuisanceFits, d: np.ndarray,
                  contrast: str) -> np.ndarray:
    n = dataset.n
    treated = d == 1
    c = np.zeros(n)
    if contrast == "piie":
        return _pair_values(dataset, fits, (1, 1)) - _pair_values(dataset, fits, (1, 0))
    if contrast == "pite":
        return _pair_values(dataset, fits, (1, 1)) - _pair_values(dataset, fits, (0, 0))
    if contrast not in CONTRASTS:
        raise ValueError(f"unknown contrast {contrast!r}; choose from {CONTRASTS}")
    if not np.any(treated):
        return c  # both arms coincide row-wise: exact zero
    if contrast == "indirect":
        c[treated] = (_pair_values(dataset, fits, (1, 1))
                      - _pair_values(dataset, fits, (1, 0)))[treated]
    elif contrast == "direct":
        c[treated] = (_pair_values(dataset, fits, (1, 0))
                      - _pair_values(dataset, fits, (0, 0)))[treated]
    elif contrast == "total":
        c[treated] = (_pair_values(dataset, fits, (1, 1))
                      - _pair_values(dataset, fits, (0, 0)))[treated]
    return c


def _positivity_check(dataset, fits, pairs) -> None:
    bound = 1.0 / fits.config.epsilon ** 3
    for pair in pairs:
        h = shift_weight_values(dataset, fits, *pair)
        worst = float(np.abs(h).max())
        if worst > bound:
            warnings.warn(
                f"shift weight reaches {worst:.3g} under contrast {pair}, "
                f"beyond 1/epsilon^3 = {bound:.3g}; estimates may be unstable",
                PositivityDiagnosticWarning, stacklevel=3)


def estimate_effect(dataset: Dataset, fits: NuisanceFits, rule: RuleSpec,
                    contrast: str, z_value: float = 1.96) -> EffectEstimate:
    """Point estimate, EIF-based standard error and Wald interval.

    The point is the weighted mean of the per-row contrast; the variance is
    the weighted (Hajek-centered) sample variance of that contrast over n.
    """
    d = rule.values(dataset)
    pairs_of = {"piie": {(1, 1), (1, 0)}, "pite": {(1, 1), (0, 0)},
                "indirect": {(1, 1), (1, 0)}, "direct": {(1, 0), (0, 0)},
                "total": {(1, 1), (0, 0)}}
    if contrast not in pairs_of:
        raise ValueError(f"unknown contrast {contrast!r}; choose from {CONTRASTS}")
    used_pairs = pairs_of[contrast]
    if contrast not in ("piie", "pite") and not np.any(d == 1):
        used_pairs = set()
    c = _row_contrast(dataset, fits, d, contrast)
    if used_pairs:
        _positivity_check(dataset, fits, sorted(used_pairs))
    w = dataset.weights
    wsum = float(np.sum(w))
    point = float(np.sum(w * c) / wsum)
    var = float(np.sum(w * (c - point) ** 2) / wsum)
    se = float(np.sqrt(var / dataset.n))
    return EffectEstimate(contrast=contrast, rule=rule.label,
                          arms=ARMS[contrast], estimate=point,
                          se=se, ci_low=point - z_value * se,
                          ci_high=point + z_value * se, n=dataset.n,
                          folds=fits.plan.folds)


def effect_table(dataset: Dataset, fits: NuisanceFits, rules,
                 contrasts=("indirect", "total"),
                 z_value: float = 1.96) -> list[EffectEstimate]:
    """One estimate per (rule, contrast): the interventional indirect and
    total effects for each rule type, mirroring a forest-plot layout."""
    out = []
    for rule in rules:
        for contrast in contrasts:
            out.append(estimate_effect(dataset, fits, rule, contrast,
                                       z_value=z_value))
    return out

"""Cross-fitted nuisance fits and per-observation pseudo-outcomes.

The nuisance vector holds five fitted regressions (treatment propensity given
W and given (M, W), the two Z-models, and the outcome regression) plus, per
contrast (a', a*), two derived conditional-expectation regressions trained on
constructed targets. Row i is always evaluated with the models trained on the
complement of its fold, so no pseudo-outcome depends on the row's own target.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .crossfit import CrossFitPlan
from .data import Dataset, feature_block
from .errors import (
    ClippingSaturationWarning,
    DegenerateFold,
    MissingArm,
    NonFinitePseudoOutcome,
    SchemaMismatch,
)
from .learners import fit_stack

CONTRAST_PAIRS = ((1, 1), (1, 0), (0, 0))


@dataclass(frozen=True)
class NuisanceConfig:
    """Learner stack and clipping used for every nuisance fit."""

    stack: tuple[str, ...] = ("mean", "glm", "lasso")
    epsilon: float = 0.01
    seed: int = 0
    stack_folds: int = 5
    pairs: tuple[tuple[int, int], ...] = CONTRAST_PAIRS
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "stack", tuple(self.stack))
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        if not 0.0 < self.epsilon <= 0.2:
            raise ValueError("epsilon must lie in (0, 0.2]")


@dataclass
class FoldModels:
    propensity: object
    propensity_given_m: object
    z_given_a: object
    z_given_am: object
    outcome: object
    projections: dict  # (a', a*) -> (u model on (Z, W), v model on W)


@dataclass
class NuisanceFits:
    """Fitted nuisances plus cached out-of-fold row evaluations.

    ``z_given_a1[i, a]`` is the clipped P(Z=1 | A=a, W_i); ``outcome_az[i, a,
    z]`` is the outcome regression at (a, z) with the row's (M, W); the
    ``u_vals``/``v_vals`` maps are keyed by contrast pair.
    """

    plan: CrossFitPlan
    config: NuisanceConfig
    fold_models: list[FoldModels]
    propensity1: np.ndarray
    propensity_given_m1: np.ndarray
    z_given_a1: np.ndarray
    z_given_am1: np.ndarray
    outcome_az: np.ndarray
    u_vals: dict
    v_vals: dict
    clip_fractions: dict
    pseudo_cache: dict = field(default_factory=dict)

    @property
    def pairs(self) -> tuple:
        return tuple(self.u_vals)


def _seed(base: int, fold: int, role: int) -> int:
    return abs(base * 1_000_003 + fold * 10_007 + role * 101)


def _clip_prob(p: np.ndarray, eps: float) -> np.ndarray:
    return np.clip(p, eps, 1.0 - eps)


def _prob_of(p1: np.ndarray, a: int) -> np.ndarray:
    return p1 if a == 1 else 1.0 - p1


def _with_consts(consts: list[float], blocks: list[np.ndarray], rows=None) -> np.ndarray:
    parts = []
    some = blocks[0] if blocks else None
    n = some.shape[0] if rows is None else len(rows)
    for c in consts:
        parts.append(np.full(n, float(c)))
    for b in blocks:
        parts.append(b if rows is None else b[rows])
    return np.column_stack(parts)


def fit_nuisances(dataset: Dataset, plan: CrossFitPlan,
                  config: NuisanceConfig | None = None) -> NuisanceFits:
    """Fit every nuisance with cross-fitting and cache row-level evaluations.

    Raises DegenerateFold when a training fold misses a treatment or
    post-treatment level, and warns when more than 5% of any probability
    fit's predictions sit on the epsilon clipping bound.
    """
    config = config or NuisanceConfig()
    schema = dataset.schema
    w = dataset.weights
    a = dataset.column(schema.treatment).astype(float)
    z = dataset.column(schema.post_treatment).astype(float)
    y = dataset.column(schema.outcome).astype(float)
    lo, hi = schema.outcome_range
    ys = (y - lo) / (hi - lo)
    Wb, _ = feature_block(dataset, schema.baseline)
    Mb, _ = feature_block(dataset, schema.mediators)
    eps = config.epsilon

    for j in range(plan.folds):
        tr = plan.train_indices(j)
        for name, col in ((schema.treatment, a), (schema.post_treatment, z)):
            if len(np.unique(col[tr])) < 2:
                raise DegenerateFold(j, name)

    def fit_fold(j: int) -> FoldModels:
        tr = plan.train_indices(j)
        stack = config.stack
        folds = config.stack_folds
        m_g = fit_stack(stack, Wb[tr], a[tr], w[tr], folds=folds,
                        seed=_seed(config.seed, j, 0))
        m_e = fit_stack(stack, np.column_stack([Mb, Wb])[tr], a[tr], w[tr],
                        folds=folds, seed=_seed(config.seed, j, 1))
        m_q = fit_stack(stack, np.column_stack([a[:, None], Wb])[tr], z[tr], w[tr],
                        folds=folds, seed=_seed(config.seed, j, 2))
        m_r = fit_stack(stack, np.column_stack([a[:, None], Mb, Wb])[tr], z[tr],
                        w[tr], folds=folds, seed=_seed(config.seed, j, 3))
        m_b = fit_stack(stack, np.column_stack([a[:, None], z[:, None], Mb, Wb])[tr],
                        ys[tr], w[tr], folds=folds, seed=_seed(config.seed, j, 4))

        def b_at(az, zz, rows):
            pred = m_b.predict(_with_consts([az, zz], [Mb, Wb], rows))
            return np.clip(pred * (hi - lo) + lo, lo, hi)

        g1 = _clip_prob(m_g.predict(Wb[tr]), eps)
        e1 = _clip_prob(m_e.predict(np.column_stack([Mb, Wb])[tr]), eps)
        projections = {}
        for k, (ap, st) in enumerate(config.pairs):
            q1 = _clip_prob(m_q.predict(_with_consts([ap], [Wb], tr)), eps)
            r1 = _clip_prob(m_r.predict(_with_consts([ap], [Mb, Wb], tr)), eps)
            z_tr = z[tr]
            q_obs = np.where(z_tr == 1.0, q1, 1.0 - q1)
            r_obs = np.where(z_tr == 1.0, r1, 1.0 - r1)
            h_tr = (_prob_of(g1, ap) / _prob_of(g1, st)) * (q_obs / r_obs) \
                * (_prob_of(e1, st) / _prob_of(e1, ap))
            b_obs = np.where(z_tr == 1.0, b_at(ap, 1, tr), b_at(ap, 0, tr))

            sub_u = tr[a[tr] == ap]
            u_target = (b_obs * h_tr)[a[tr] == ap]
            m_u = fit_stack(config.stack,
                            np.column_stack([z[:, None], Wb])[sub_u],
                            u_target, w[sub_u], folds=config.stack_folds,
                            seed=_seed(config.seed, j, 5 + 2 * k))

            sub_v = tr[a[tr] == st]
            q1_v = _clip_prob(m_q.predict(_with_consts([ap], [Wb], sub_v)), eps)
            v_target = (b_at(ap, 1, sub_v) * q1_v + b_at(ap, 0, sub_v) * (1.0 - q1_v))
            m_v = fit_stack(config.stack, Wb[sub_v], v_target, w[sub_v],
                            folds=config.stack_folds,
                            seed=_seed(config.seed, j, 6 + 2 * k))
            projections[(ap, st)] = (m_u, m_v)
        return FoldModels(propensity=m_g, propensity_given_m=m_e, z_given_a=m_q,
                          z_given_am=m_r, outcome=m_b, projections=projections)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            fold_models = list(pool.map(fit_fold, range(plan.folds)))
    else:
        fold_models = [fit_fold(j) for j in range(plan.folds)]

    n = dataset.n
    propensity1 = np.empty(n)
    pgm1 = np.empty(n)
    z_given_a1 = np.empty((n, 2))
    z_given_am1 = np.empty((n, 2))
    outcome_az = np.empty((n, 2, 2))
    u_vals = {pair: np.empty((n, 2)) for pair in config.pairs}
    v_vals = {pair: np.empty(n) for pair in config.pairs}
    at_bound = {"propensity": 0, "propensity_given_m": 0, "z_given_a": 0,
                "z_given_am": 0}

    for j, fm in enumerate(fold_models):
        va = plan.val_indices(j)
        g1 = _clip_prob(fm.propensity.predict(Wb[va]), eps)
        e1 = _clip_prob(fm.propensity_given_m.predict(
            np.column_stack([Mb, Wb])[va]), eps)
        propensity1[va] = g1
        pgm1[va] = e1
        at_bound["propensity"] += int(np.sum((g1 == eps) | (g1 == 1 - eps)))
        at_bound["propensity_given_m"] += int(np.sum((e1 == eps) | (e1 == 1 - eps)))
        for arm in (0, 1):
            q1 = _clip_prob(fm.z_given_a.predict(_with_consts([arm], [Wb], va)), eps)
            r1 = _clip_prob(fm.z_given_am.predict(
                _with_consts([arm], [Mb, Wb], va)), eps)
            z_given_a1[va, arm] = q1
            z_given_am1[va, arm] = r1
            at_bound["z_given_a"] += int(np.sum((q1 == eps) | (q1 == 1 - eps)))
            at_bound["z_given_am"] += int(np.sum((r1 == eps) | (r1 == 1 - eps)))
            for zz in (0, 1):
                pred = fm.outcome.predict(_with_consts([arm, zz], [Mb, Wb], va))
                outcome_az[va, arm, zz] = np.clip(pred * (hi - lo) + lo, lo, hi)
        for pair, (m_u, m_v) in fm.projections.items():
            for zz in (0, 1):
                u_vals[pair][va, zz] = m_u.predict(_with_consts([zz], [Wb], va))
            v_vals[pair][va] = m_v.predict(Wb[va])

    clip_fractions = {}
    for role, count in at_bound.items():
        denom = n * (2 if role.startswith("z_") else 1)
        frac = count / denom
        clip_fractions[role] = frac
        if frac > 0.05:
            warnings.warn(
                f"{role}: {frac:.1%} of predictions sit on the epsilon={eps} bound",
                ClippingSaturationWarning, stacklevel=2)

    return NuisanceFits(plan=plan, config=config, fold_models=fold_models,
                        propensity1=propensity1, propensity_given_m1=pgm1,
                        z_given_a1=z_given_a1, z_given_am1=z_given_am1,
                        outcome_az=outcome_az, u_vals=u_vals, v_vals=v_vals,
                        clip_fractions=clip_fractions)


def shift_weight_values(dataset: Dataset, fits: NuisanceFits,
                        a_prime: int, a_star: int) -> np.ndarray:
    """The mediator-shift weight h at each row's observed (z, m, w).

    Computed from the literal three-ratio formula; when a' = a* the
    propensity ratios cancel to exactly one and h reduces to q/r.
    """
    z = dataset.column(dataset.schema.post_treatment).astype(float)
    g_num = _prob_of(fits.propensity1, a_prime)
    g_den = _prob_of(fits.propensity1, a_star)
    q1 = fits.z_given_a1[:, a_prime]
    r1 = fits.z_given_am1[:, a_prime]
    q_obs = np.where(z == 1.0, q1, 1.0 - q1)
    r_obs = np.where(z == 1.0, r1, 1.0 - r1)
    e_num = _prob_of(fits.propensity_given_m1, a_star)
    e_den = _prob_of(fits.propensity_given_m1, a_prime)
    return (g_num / g_den) * (q_obs / r_obs) * (e_num / e_den)


def _pseudo_terms(dataset: Dataset, fits: NuisanceFits,
                  a_prime: int, a_star: int) -> dict[str, np.ndarray]:
    pair = (a_prime, a_star)
    if pair not in fits.u_vals:
        raise MissingArm(pair)
    if dataset.n != fits.plan.n:
        raise SchemaMismatch("nuisance fits belong to a different dataset")
    schema = dataset.schema
    a = dataset.column(schema.treatment).astype(float)
    z = dataset.column(schema.post_treatment).astype(float)
    y = dataset.column(schema.outcome).astype(float)

    ind_ap = (a == a_prime).astype(float)
    ind_st = (a == a_star).astype(float)
    g_ap = _prob_of(fits.propensity1, a_prime)
    g_st = _prob_of(fits.propensity1, a_star)
    q1 = fits.z_given_a1[:, a_prime]
    h = shift_weight_values(dataset, fits, a_prime, a_star)
    zi = z.astype(int)
    b_obs = fits.outcome_az[np.arange(dataset.n), a_prime, zi]
    u = fits.u_vals[pair]
    v = fits.v_vals[pair]
    plug = fits.outcome_az[:, a_prime, 1] * q1 + fits.outcome_az[:, a_prime, 0] * (1.0 - q1)

    return {
        "outcome_residual": ind_ap / g_ap * h * (y - b_obs),
        "z_residual": ind_ap / g_ap * (u[:, 1] - u[:, 0]) * (z - q1),
        "plugin_centered": ind_st / g_st * (plug - v),
        "projection": v,
        "_shift_weight": h,
    }


def pseudo_outcome_values(dataset: Dataset, fits: NuisanceFits,
                          a_prime: int, a_star: int) -> np.ndarray:
    """Vectorized per-row pseudo-outcomes for one contrast pair (cached)."""
    pair = (a_prime, a_star)
    if pair in fits.pseudo_cache:
        return fits.pseudo_cache[pair]
    terms = _pseudo_terms(dataset, fits, a_prime, a_star)
    total = np.zeros(dataset.n)
    for name, arr in terms.items():
        if name.startswith("_"):
            continue
        bad = np.nonzero(~np.isfinite(arr))[0]
        if bad.size:
            raise NonFinitePseudoOutcome(name, int(bad[0]))
        total += arr
    fits.pseudo_cache[pair] = total
    return total


def pseudo_outcome(dataset: Dataset, i: int, fits: NuisanceFits,
                   a_prime: int, a_star: int) -> float:
    """The four-term transform for a single row, from its fold's models."""
    return float(pseudo_outcome_values(dataset, fits, a_prime, a_star)[i])


@dataclass
class PseudoOutcomes:
    """Blip transform per row: the (1,1) and (1,0) arms and their difference,
    with fold provenance and shift-weight extremes for positivity audits."""

    d11: np.ndarray
    d10: np.ndarray
    values: np.ndarray
    fold: np.ndarray
    h_range: dict

    @property
    def n(self) -> int:
        return len(self.values)


def pseudo_contrast(dataset: Dataset, fits: NuisanceFits) -> PseudoOutcomes:
    """D = D^(1,1) - D^(1,0): the unbiased transform whose conditional mean
    given V is the blip."""
    d11 = pseudo_outcome_values(dataset, fits, 1, 1)
    d10 = pseudo_outcome_values(dataset, fits, 1, 0)
    h_range = {}
    for pair in ((1, 1), (1, 0)):
        h = shift_weight_values(dataset, fits, *pair)
        h_range[pair] = (float(h.min()), float(h.max()))
    return PseudoOutcomes(d11=d11, d10=d10, values=d11 - d10,
                          fold=fits.plan.assignment.copy(), h_range=h_range)

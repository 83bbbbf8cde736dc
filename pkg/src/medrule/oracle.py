"""Finite-support structural equation models and exact enumeration.

A DiscreteDGP stores the factorized observational law of O = (W, A, Z, M, Y)
as dense conditional probability tables over small finite supports. Every
identified quantity (conditional blips, population interventional effects,
pseudo-outcome expectations) is computed by exact summation, making this
module the ground-truth oracle for the sampling-based estimators.

Array index conventions used throughout: ``[w, a, z, m]`` where ``w``/``m``
index the W/M support lists and ``a``/``z`` are the binary levels.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .data import ColumnSchema, Dataset, validate_dataset
from .errors import PositivityViolation, UnknownStratum

ROW_SUM_TOL = 1e-12


def _as_support(rows) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in row) for row in rows)


@dataclass(frozen=True)
class DiscreteDGP:
    """Distributional encoding of the structural model W -> A -> Z -> M -> Y.

    ``p_w``: (nW,) marginal of the W configuration.
    ``p_a``: (nW, 2) treatment probabilities given W.
    ``p_z``: (nW, 2, 2) post-treatment probabilities given (A, W).
    ``p_m``: (nW, 2, 2, nM) mediator probabilities given (Z, A, W).
    ``p_y``: (nW, 2, 2, nM) P(Y = 1) given (M, Z, A, W).
    """

    w_names: tuple[str, ...]
    w_support: tuple[tuple[float, ...], ...]
    v_names: tuple[str, ...]
    m_names: tuple[str, ...]
    m_support: tuple[tuple[float, ...], ...]
    p_w: np.ndarray
    p_a: np.ndarray
    p_z: np.ndarray
    p_m: np.ndarray
    p_y: np.ndarray
    a_name: str = "A"
    z_name: str = "Z"
    y_name: str = "Y"

    def __post_init__(self):
        object.__setattr__(self, "w_names", tuple(self.w_names))
        object.__setattr__(self, "v_names", tuple(self.v_names))
        object.__setattr__(self, "m_names", tuple(self.m_names))
        object.__setattr__(self, "w_support", _as_support(self.w_support))
        object.__setattr__(self, "m_support", _as_support(self.m_support))
        for field, arr in (("p_w", self.p_w), ("p_a", self.p_a), ("p_z", self.p_z),
                           ("p_m", self.p_m), ("p_y", self.p_y)):
            a = np.asarray(arr, dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, field, a)
        if set(self.v_names) - set(self.w_names):
            raise ValueError("rule covariates must be a subset of the baseline names")
        nw, nm = len(self.w_support), len(self.m_support)
        shapes = {"p_w": (nw,), "p_a": (nw, 2), "p_z": (nw, 2, 2),
                  "p_m": (nw, 2, 2, nm), "p_y": (nw, 2, 2, nm)}
        for field, shape in shapes.items():
            got = getattr(self, field).shape
            if got != shape:
                raise ValueError(f"{field} has shape {got}, expected {shape}")
        for field in shapes:
            arr = getattr(self, field)
            if np.any(arr < 0) or np.any(arr > 1):
                raise ValueError(f"{field} holds entries outside [0, 1]")
        for field, axis in (("p_w", 0), ("p_a", 1), ("p_z", 2), ("p_m", 3)):
            sums = getattr(self, field).sum(axis=axis)
            if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
                raise ValueError(f"{field} rows do not sum to one")

    @property
    def n_w(self) -> int:
        return len(self.w_support)

    @property
    def n_m(self) -> int:
        return len(self.m_support)

    @property
    def v_support(self) -> tuple[tuple[float, ...], ...]:
        idx = [self.w_names.index(name) for name in self.v_names]
        seen = sorted({tuple(row[i] for i in idx) for row in self.w_support})
        return tuple(seen)

    @property
    def v_index_of_w(self) -> np.ndarray:
        """Maps each W-support index to its V-support index."""
        idx = [self.w_names.index(name) for name in self.v_names]
        lookup = {v: k for k, v in enumerate(self.v_support)}
        return np.array([lookup[tuple(row[i] for i in idx)] for row in self.w_support])

    def schema(self, weight: str | None = None) -> ColumnSchema:
        return ColumnSchema(
            baseline=self.w_names, rule_covariates=self.v_names,
            treatment=self.a_name, post_treatment=self.z_name,
            mediators=self.m_names, outcome=self.y_name,
            weight=weight, outcome_range=(0.0, 1.0),
        )


@dataclass(frozen=True)
class TrueNuisances:
    """Exact nuisance tables for one contrast (a', a*); see derive_true_nuisances.

    ``propensity[w, a]`` is P(A=a|w); ``propensity_given_m[w, m, a]`` is
    P(A=a|m,w); ``z_given_a[w, a, z]`` and ``z_given_am[w, a, m, z]`` are the
    two Z-models; ``outcome[w, a, z, m]`` is E[Y|a,z,m,w]; ``shift_weight`` is
    the mediator-shift density ratio; ``weighted_outcome[w, z]`` and
    ``plugin_outcome[w]`` are the two derived conditional expectations.
    """

    a_prime: int
    a_star: int
    outcome: np.ndarray
    propensity: np.ndarray
    propensity_given_m: np.ndarray
    z_given_a: np.ndarray
    z_given_am: np.ndarray
    shift_weight: np.ndarray
    weighted_outcome: np.ndarray
    plugin_outcome: np.ndarray

    def replace(self, **kwargs) -> "TrueNuisances":
        return dataclasses.replace(self, **kwargs)


def _safe_div(num: np.ndarray, den: np.ndarray, fill) -> np.ndarray:
    out = np.where(den > 0, num / np.where(den > 0, den, 1.0), fill)
    return out


def mediator_marginal(dgp: DiscreteDGP) -> np.ndarray:
    """p(m | a, w) with Z summed out; shape (nW, 2, nM)."""
    return np.einsum("waz,wazm->wam", dgp.p_z, dgp.p_m)


def check_positivity(dgp: DiscreteDGP, a_prime: int, a_star: int) -> None:
    """Raise PositivityViolation on any zero cell the contrast requires.

    Required: both treatment arms reachable in every W stratum, and the
    mediator's conditional support under (a', z) covering its support under
    a* wherever q(z | a', w) > 0.
    """
    marg = mediator_marginal(dgp)
    for w in range(dgp.n_w):
        if dgp.p_w[w] == 0:
            continue
        for a in {a_prime, a_star}:
            if dgp.p_a[w, a] == 0:
                raise PositivityViolation(f"P(A={a} | W={dgp.w_support[w]}) = 0")
        for m in range(dgp.n_m):
            if marg[w, a_star, m] == 0:
                continue
            for z in range(2):
                if dgp.p_z[w, a_prime, z] > 0 and dgp.p_m[w, a_prime, z, m] == 0:
                    raise PositivityViolation(
                        f"P(M={dgp.m_support[m]} | Z={z}, A={a_prime}, "
                        f"W={dgp.w_support[w]}) = 0"
                    )


def positivity_margin(dgp: DiscreteDGP, a_prime: int, a_star: int) -> float:
    """Diagnostic: min over the contrast-relevant cells of g, q, r and e."""
    nuis = derive_true_nuisances(dgp, a_prime, a_star)
    marg = mediator_marginal(dgp)
    cells = []
    for w in range(dgp.n_w):
        if dgp.p_w[w] == 0:
            continue
        cells.append(dgp.p_a[w, a_prime])
        cells.append(dgp.p_a[w, a_star])
        cells.extend(dgp.p_z[w, a_prime, :])
        for m in range(dgp.n_m):
            if marg[w, a_star, m] == 0:
                continue
            cells.append(nuis.propensity_given_m[w, m, a_prime])
            for z in range(2):
                if dgp.p_z[w, a_prime, z] > 0:
                    cells.append(nuis.z_given_am[w, a_prime, m, z])
    return float(min(cells))


def derive_true_nuisances(dgp: DiscreteDGP, a_prime: int, a_star: int) -> TrueNuisances:
    """Exact Bayes derivation of every nuisance table for one contrast.

    The two ratio models come from the joint law: P(A=a|m,w) by weighting the
    mediator marginals with the treatment probabilities, and P(Z=z|a,m,w) by
    inverting the (Z, M) joint given (A, W). Conditioning events of
    probability zero get neutral fill values; they carry no enumeration
    weight.
    """
    check_positivity(dgp, a_prime, a_star)
    joint_zm = dgp.p_z[:, :, :, None] * dgp.p_m          # [w,a,z,m]
    marg = joint_zm.sum(axis=2)                          # [w,a,m]
    r = _safe_div(np.moveaxis(joint_zm, 2, 3), marg[:, :, :, None], 0.5)  # [w,a,m,z]
    p_ma = marg * dgp.p_a[:, :, None]                    # [w,a,m]
    p_m_w = p_ma.sum(axis=1)                             # [w,m]
    fill_e = np.broadcast_to(dgp.p_a[:, None, :], (dgp.n_w, dgp.n_m, 2))
    e = _safe_div(np.moveaxis(p_ma, 1, 2), p_m_w[:, :, None], fill_e)  # [w,m,a]

    g_num = dgp.p_a[:, a_prime][:, None, None]
    g_den = dgp.p_a[:, a_star][:, None, None]
    q_z = dgp.p_z[:, a_prime, :][:, :, None]             # [w,z,1]
    r_z = np.moveaxis(r[:, a_prime, :, :], 1, 2)         # [w,z,m]
    e_num = e[:, :, a_star][:, None, :]                  # [w,1,m]
    e_den = e[:, :, a_prime][:, None, :]
    h = (g_num / g_den) * _safe_div(q_z, r_z, 0.0) * (e_num / e_den)  # [w,z,m]

    b = dgp.p_y                                          # E[Y|...] for binary Y
    u = np.einsum("wzm,wzm,wzm->wz", dgp.p_m[:, a_prime, :, :],
                  b[:, a_prime, :, :], h)
    plug_m = np.einsum("wz,wzm->wm", dgp.p_z[:, a_prime, :], b[:, a_prime, :, :])
    v = np.einsum("wm,wm->w", marg[:, a_star, :], plug_m)

    return TrueNuisances(
        a_prime=a_prime, a_star=a_star, outcome=b, propensity=dgp.p_a,
        propensity_given_m=e, z_given_a=dgp.p_z, z_given_am=r,
        shift_weight=h, weighted_outcome=u, plugin_outcome=v,
    )


def _normalize_stratum(dgp: DiscreteDGP, v) -> tuple[float, ...]:
    if np.isscalar(v):
        v = (v,)
    v = tuple(float(x) for x in v)
    if v not in dgp.v_support:
        raise UnknownStratum(v)
    return v


def _stratum_weights(dgp: DiscreteDGP, v: tuple[float, ...]) -> np.ndarray:
    """p(w | V=v): the W-marginal restricted to the stratum, renormalized."""
    v_of_w = dgp.v_index_of_w
    v_idx = dgp.v_support.index(v)
    mask = (v_of_w == v_idx).astype(float)
    total = float((dgp.p_w * mask).sum())
    if total == 0:
        raise UnknownStratum(v)
    return dgp.p_w * mask / total


def true_blip(dgp: DiscreteDGP, v) -> float:
    """Conditional average interventional indirect effect B at stratum v.

    Exact sum of b(1,z,m,w) q(z|1,w) {p(m|1,w) - p(m|0,w)} over the stratum.
    """
    v = _normalize_stratum(dgp, v)
    pw_v = _stratum_weights(dgp, v)
    marg = mediator_marginal(dgp)
    inner = np.einsum("wz,wzm,wm->w", dgp.p_z[:, 1, :], dgp.p_y[:, 1, :, :],
                      marg[:, 1, :] - marg[:, 0, :])
    return float(np.dot(pw_v, inner))


def sign_rule(dgp: DiscreteDGP) -> dict[tuple[float, ...], int]:
    """The treat-permissible rule d(v) = 1{B(v) <= 0} on the V support."""
    return {v: int(true_blip(dgp, v) <= 0.0) for v in dgp.v_support}


@dataclass(frozen=True)
class PopulationEffects:
    indirect: float
    direct: float
    total: float


def _rule_per_w(dgp: DiscreteDGP, rule) -> np.ndarray:
    v_of_w = dgp.v_index_of_w
    support = dgp.v_support
    if callable(rule):
        values = {v: int(rule(v)) for v in support}
    else:
        values = {}
        for v in support:
            key = v if v in rule else (v[0] if len(v) == 1 and v[0] in rule else None)
            if key is None:
                raise UnknownStratum(v)
            values[v] = int(rule[key])
    out = np.array([values[support[k]] for k in v_of_w])
    if not set(out.tolist()) <= {0, 1}:
        raise ValueError("rule values must be 0 or 1")
    return out


def true_population_effects(dgp: DiscreteDGP, rule) -> PopulationEffects:
    """Exact population interventional effects of deploying the rule.

    ``rule`` maps every V-support stratum to {0, 1} (mapping or callable;
    constants work as ``lambda v: 1``). The indirect arm contrasts the
    mediator draw under the rule against the untreated draw; the direct arm
    contrasts treatment assignment under the rule against no treatment, both
    holding the untreated mediator draw. Total = indirect + direct by
    construction.
    """
    d = _rule_per_w(dgp, rule)
    marg = mediator_marginal(dgp)
    w_idx = np.arange(dgp.n_w)
    b_d = dgp.p_y[w_idx, d, :, :]                        # [w,z,m]
    q_d = dgp.p_z[w_idx, d, :]                           # [w,z]
    marg_d = marg[w_idx, d, :]                           # [w,m]
    indirect = float(np.dot(dgp.p_w, np.einsum(
        "wz,wzm,wm->w", q_d, b_d, marg_d - marg[:, 0, :])))
    mean_d0 = np.einsum("wz,wzm,wm->w", q_d, b_d, marg[:, 0, :])
    mean_00 = np.einsum("wz,wzm,wm->w", dgp.p_z[:, 0, :], dgp.p_y[:, 0, :, :],
                        marg[:, 0, :])
    direct = float(np.dot(dgp.p_w, mean_d0 - mean_00))
    return PopulationEffects(indirect=indirect, direct=direct,
                             total=indirect + direct)


def expected_counterfactual(dgp: DiscreteDGP, a_prime: int, a_star: int) -> float:
    """E(Y) with treatment a' and the mediator drawn from its a* law."""
    marg = mediator_marginal(dgp)
    return float(np.dot(dgp.p_w, np.einsum(
        "wz,wzm,wm->w", dgp.p_z[:, a_prime, :], dgp.p_y[:, a_prime, :, :],
        marg[:, a_star, :])))


def simulate(dgp: DiscreteDGP, n: int, seed: int) -> Dataset:
    """Draw n i.i.d. observations by ancestral sampling W -> A -> Z -> M -> Y."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    w_idx = rng.choice(dgp.n_w, size=n, p=dgp.p_w)
    a = (rng.random(n) < dgp.p_a[w_idx, 1]).astype(float)
    ai = a.astype(int)
    z = (rng.random(n) < dgp.p_z[w_idx, ai, 1]).astype(float)
    zi = z.astype(int)
    cum = np.cumsum(dgp.p_m[w_idx, ai, zi, :], axis=1)
    m_idx = np.minimum((rng.random(n)[:, None] >= cum).sum(axis=1), dgp.n_m - 1)
    y = (rng.random(n) < dgp.p_y[w_idx, ai, zi, m_idx]).astype(float)

    w_vals = np.asarray(dgp.w_support)[w_idx]
    m_vals = np.asarray(dgp.m_support)[m_idx]
    table = {name: w_vals[:, k] for k, name in enumerate(dgp.w_names)}
    table[dgp.a_name] = a
    table[dgp.z_name] = z
    for k, name in enumerate(dgp.m_names):
        table[name] = m_vals[:, k]
    table[dgp.y_name] = y
    return validate_dataset(table, dgp.schema())


def support_indices(dgp: DiscreteDGP, dataset: Dataset):
    """Map dataset rows onto (w_idx, a, z, m_idx, y) support coordinates."""
    w_lookup = {row: i for i, row in enumerate(dgp.w_support)}
    m_lookup = {row: i for i, row in enumerate(dgp.m_support)}
    w_cols = [dataset.column(name).astype(float) for name in dgp.w_names]
    m_cols = [dataset.column(name).astype(float) for name in dgp.m_names]
    n = dataset.n
    w_idx = np.empty(n, dtype=int)
    m_idx = np.empty(n, dtype=int)
    for i in range(n):
        try:
            w_idx[i] = w_lookup[tuple(col[i] for col in w_cols)]
            m_idx[i] = m_lookup[tuple(col[i] for col in m_cols)]
        except KeyError:
            raise UnknownStratum(tuple(col[i] for col in w_cols)) from None
    a = dataset.column(dgp.a_name).astype(int)
    z = dataset.column(dgp.z_name).astype(int)
    y = dataset.column(dgp.y_name).astype(int)
    return w_idx, a, z, m_idx, y


def pseudo_outcome_table(nuis: TrueNuisances) -> np.ndarray:
    """The per-observation transform D as a dense table over (w, a, z, m, y).

    Four-term structure: the h-weighted outcome residual and the Z-residual
    term fire on A = a'; the plug-in-minus-projection term fires on A = a*;
    the projection itself enters unconditionally.
    """
    ap, st = nuis.a_prime, nuis.a_star
    n_w, _, _, n_m = nuis.outcome.shape
    g_ap = nuis.propensity[:, ap]
    g_st = nuis.propensity[:, st]
    v = nuis.plugin_outcome
    u_gap = nuis.weighted_outcome[:, 1] - nuis.weighted_outcome[:, 0]
    q1 = nuis.z_given_a[:, ap, 1]
    plug = np.einsum("wz,wzm->wm", nuis.z_given_a[:, ap, :], nuis.outcome[:, ap, :, :])

    y_grid = np.array([0.0, 1.0])
    d = np.broadcast_to(v[:, None, None, None, None],
                        (n_w, 2, 2, n_m, 2)).copy()
    # A = a* branch: plug-in centered by the projection
    d[:, st] += ((plug - v[:, None]) / g_st[:, None])[:, None, :, None]
    # A = a' branches: residual terms
    z_grid = np.array([0.0, 1.0])
    d[:, ap] += ((u_gap / g_ap)[:, None] * (z_grid[None, :] - q1[:, None]))[:, :, None, None]
    resid = y_grid[None, None, None, :] - nuis.outcome[:, ap, :, :, None]   # [w,z,m,y]
    d[:, ap] += (nuis.shift_weight[:, :, :, None] * resid) / g_ap[:, None, None, None]
    return d


def joint_table(dgp: DiscreteDGP) -> np.ndarray:
    """p(w, a, z, m, y) as a dense table matching pseudo_outcome_table."""
    p_y1 = dgp.p_y
    p_y_stack = np.stack([1.0 - p_y1, p_y1], axis=-1)    # [w,a,z,m,y]
    return (dgp.p_w[:, None, None, None, None]
            * dgp.p_a[:, :, None, None, None]
            * dgp.p_z[:, :, :, None, None]
            * dgp.p_m[:, :, :, :, None]
            * p_y_stack)


def enumerated_transform_mean(dgp: DiscreteDGP, nuis: TrueNuisances,
                              v=None) -> float:
    """E[D | V=v] (or the unconditional mean) under the DGP's exact law.

    ``nuis`` may be a deliberately corrupted table bundle; the joint law is
    always the DGP's truth, so this evaluates the transform's conditional
    bias exactly.
    """
    d = pseudo_outcome_table(nuis)
    joint = joint_table(dgp)
    if v is None:
        return float(np.sum(d * joint))
    v = _normalize_stratum(dgp, v)
    pw_v = _stratum_weights(dgp, v)
    scale = _safe_div(pw_v, dgp.p_w, 0.0)
    return float(np.sum(d * joint * scale[:, None, None, None, None]))


def enumerated_blip_transform_mean(dgp: DiscreteDGP, nuis_11: TrueNuisances,
                                   nuis_10: TrueNuisances, v=None) -> float:
    """E[D^(1,1) - D^(1,0) | V=v]; equals the blip when the tables are exact."""
    return (enumerated_transform_mean(dgp, nuis_11, v)
            - enumerated_transform_mean(dgp, nuis_10, v))


def oracle_pseudo_values(dgp: DiscreteDGP, nuis: TrueNuisances,
                         dataset: Dataset) -> np.ndarray:
    """Evaluate the exact-table transform on observed rows (table lookup)."""
    w_idx, a, z, m_idx, y = support_indices(dgp, dataset)
    return pseudo_outcome_table(nuis)[w_idx, a, z, m_idx, y]


def to_json(dgp: DiscreteDGP) -> str:
    """Serialize to the documented JSON layout; round-trips losslessly."""
    doc = {
        "baseline": {"names": list(dgp.w_names),
                     "support": [list(r) for r in dgp.w_support]},
        "rule_covariates": list(dgp.v_names),
        "mediators": {"names": list(dgp.m_names),
                      "support": [list(r) for r in dgp.m_support]},
        "treatment": dgp.a_name,
        "post_treatment": dgp.z_name,
        "outcome": dgp.y_name,
        "p_w": dgp.p_w.tolist(),
        "p_a_given_w": dgp.p_a.tolist(),
        "p_z_given_aw": dgp.p_z.tolist(),
        "p_m_given_zaw": dgp.p_m.tolist(),
        "p_y1_given_mzaw": dgp.p_y.tolist(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def from_json(text: str) -> DiscreteDGP:
    doc = json.loads(text)
    return DiscreteDGP(
        w_names=tuple(doc["baseline"]["names"]),
        w_support=tuple(tuple(r) for r in doc["baseline"]["support"]),
        v_names=tuple(doc["rule_covariates"]),
        m_names=tuple(doc["mediators"]["names"]),
        m_support=tuple(tuple(r) for r in doc["mediators"]["support"]),
        p_w=np.array(doc["p_w"]),
        p_a=np.array(doc["p_a_given_w"]),
        p_z=np.array(doc["p_z_given_aw"]),
        p_m=np.array(doc["p_m_given_zaw"]),
        p_y=np.array(doc["p_y1_given_mzaw"]),
        a_name=doc["treatment"], z_name=doc["post_treatment"],
        y_name=doc["outcome"],
    )

"""Shared test utilities: nuisance corruption for the robustness checks."""
import numpy as np

from medrule.oracle import DiscreteDGP, TrueNuisances


def recompute_shift_weight(nuis: TrueNuisances) -> np.ndarray:
    """The literal three-ratio shift weight from (possibly corrupted) tables."""
    ap, st = nuis.a_prime, nuis.a_star
    g, q = nuis.propensity, nuis.z_given_a
    r, e = nuis.z_given_am, nuis.propensity_given_m
    g_num = g[:, ap][:, None, None]
    g_den = g[:, st][:, None, None]
    q_z = q[:, ap, :][:, :, None]
    r_z = np.moveaxis(r[:, ap, :, :], 1, 2)
    e_num = e[:, :, st][:, None, :]
    e_den = e[:, :, ap][:, None, :]
    return (g_num / g_den) * (q_z / np.where(r_z > 0, r_z, 1.0)) * (e_num / e_den)


def recompute_weighted_outcome(nuis: TrueNuisances, dgp: DiscreteDGP) -> np.ndarray:
    """u consistent with whatever outcome/shift tables the bundle carries."""
    ap = nuis.a_prime
    return np.einsum("wzm,wzm,wzm->wz", dgp.p_m[:, ap, :, :],
                     nuis.outcome[:, ap, :, :], nuis.shift_weight)


def _flip_binary(table_last_axis: np.ndarray, shift: float) -> np.ndarray:
    """Add ``shift`` to the level-1 slice of a binary conditional table and
    complement the level-0 slice so the rows still sum to one."""
    p1 = table_last_axis[..., 1] + shift
    assert np.all(p1 > 0) and np.all(p1 < 1), "corruption left the table valid"
    return np.stack([1.0 - p1, p1], axis=-1)


def corrupt_outcome_and_propensity(nuis: TrueNuisances,
                                   dgp: DiscreteDGP) -> TrueNuisances:
    """Branch with the projection and all three ratio models correct:
    corrupt the outcome regression and the treatment propensity (the shift
    weight and u follow the corrupted pieces)."""
    bad = nuis.replace(outcome=nuis.outcome + 0.1,
                       propensity=_flip_binary(nuis.propensity, 0.1))
    bad = bad.replace(shift_weight=recompute_shift_weight(bad))
    return bad.replace(weighted_outcome=recompute_weighted_outcome(bad, dgp))


def corrupt_ratios_and_projection(nuis: TrueNuisances,
                                  dgp: DiscreteDGP) -> TrueNuisances:
    """Branch with the propensity, outcome regression and first Z-model
    correct: corrupt the mediator-conditional propensity, the second Z-model
    and the projection."""
    bad = nuis.replace(propensity_given_m=_flip_binary(nuis.propensity_given_m, 0.1),
                       z_given_am=_flip_binary(nuis.z_given_am, 0.08),
                       plugin_outcome=nuis.plugin_outcome + 0.1)
    bad = bad.replace(shift_weight=recompute_shift_weight(bad))
    return bad.replace(weighted_outcome=recompute_weighted_outcome(bad, dgp))

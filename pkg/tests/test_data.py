import numpy as np
import pytest

from medrule import ColumnSchema, WeightVector, feature_block, normalize_weights, validate_dataset
from medrule.errors import (
    AllZeroWeights,
    MissingColumn,
    MissingValue,
    NegativeWeight,
    NonBinaryTreatment,
    OutOfRangeOutcome,
)


def schema(**kwargs):
    base = dict(baseline=("w",), rule_covariates=("w",), treatment="A",
                post_treatment="Z", mediators=("m",), outcome="Y")
    base.update(kwargs)
    return ColumnSchema(**base)


def table(**overrides):
    t = {"w": [0, 1, 0, 1], "A": [0, 1, 1, 0], "Z": [0, 0, 1, 1],
         "m": [1, 0, 1, 0], "Y": [0, 1, 1, 0]}
    t.update(overrides)
    return t


def test_wellformed_table_passes():
    ds = validate_dataset(table(), schema())
    assert ds.n == 4
    assert np.all(ds.weights == 1.0)
    assert ds.summary()["n"] == 4


def test_nonbinary_treatment_rejected():
    with pytest.raises(NonBinaryTreatment):
        validate_dataset(table(A=[0, 1, 2, 0]), schema())


def test_nonbinary_post_treatment_rejected():
    with pytest.raises(NonBinaryTreatment):
        validate_dataset(table(Z=[0, 0.5, 1, 1]), schema())


def test_weight_column_already_mean_one_unchanged():
    ds = validate_dataset(table(wt=[2, 2, 0, 0]), schema(weight="wt"))
    assert np.array_equal(ds.weights, [2.0, 2.0, 0.0, 0.0])


def test_weight_column_rescaled_to_mean_one():
    ds = validate_dataset(table(wt=[1, 2, 3, 4]), schema(weight="wt"))
    assert abs(ds.weights.mean() - 1.0) <= 1e-12
    # ratios preserved
    assert ds.weights[3] / ds.weights[0] == pytest.approx(4.0, abs=1e-12)


def test_normalize_identity_under_unit_weights():
    out = normalize_weights(WeightVector(np.array([1.0, 1.0, 1.0])))
    assert np.array_equal(out.values, [1.0, 1.0, 1.0])
    assert out.mean_one


def test_normalize_two_four():
    out = normalize_weights(WeightVector(np.array([2.0, 4.0])))
    expected = np.array([2.0, 4.0]) * 2 / 6  # n / sum(w)
    assert np.allclose(out.values, expected, atol=1e-15)
    assert abs(out.values.mean() - 1.0) <= 1e-12


def test_normalize_all_zero_rejected():
    with pytest.raises(AllZeroWeights):
        normalize_weights(WeightVector(np.array([0.0, 0.0])))


def test_negative_weight_rejected():
    with pytest.raises(NegativeWeight):
        validate_dataset(table(wt=[1, -1, 1, 1]), schema(weight="wt"))


@pytest.mark.parametrize("seed", range(5))
def test_normalization_preserves_ratios(seed):
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.1, 9.0, size=17)
    out = normalize_weights(WeightVector(raw)).values
    i, j = rng.integers(0, 17, size=2)
    assert out[i] / out[j] == pytest.approx(raw[i] / raw[j], rel=1e-12)


def test_missing_column():
    t = table()
    del t["m"]
    with pytest.raises(MissingColumn):
        validate_dataset(t, schema())


def test_missing_value_is_hard_error():
    with pytest.raises(MissingValue) as err:
        validate_dataset(table(Y=["0", "", "1", "0"]), schema())
    assert err.value.row == 1 and err.value.column == "Y"


def test_unparseable_token_reported_as_missing():
    with pytest.raises(MissingValue):
        validate_dataset(table(w=["0", "oops", "0", "1"]), schema())


def test_outcome_out_of_declared_range():
    with pytest.raises(OutOfRangeOutcome):
        validate_dataset(table(Y=[0, 1, 3, 0]), schema(outcome_range=(0.0, 2.0)))


def test_bounded_continuous_outcome_accepted():
    ds = validate_dataset(table(Y=[0.2, 1.7, 0.9, 2.0]),
                          schema(outcome_range=(0.0, 2.0)))
    assert ds.column("Y").max() == 2.0


def test_categorical_levels_enforced_and_one_hot():
    sch = schema(baseline=("w", "site"), categorical_levels={"site": ("a", "b", "c")})
    ds = validate_dataset(table(site=["a", "b", "c", "b"]), sch)
    X, names = feature_block(ds, ("w", "site"))
    assert names == ["w", "site=b", "site=c"]
    assert np.array_equal(X[:, 1], [0, 1, 0, 1])
    with pytest.raises(MissingValue):
        validate_dataset(table(site=["a", "b", "d", "b"]), sch)


def test_validation_idempotent():
    ds1 = validate_dataset(table(wt=[1, 2, 3, 4]), schema(weight="wt"))
    ds2 = validate_dataset(ds1, ds1.schema)
    assert np.array_equal(ds1.weights, ds2.weights)
    for name in ds1.schema.all_columns:
        assert np.array_equal(ds1.column(name), ds2.column(name))


def test_duplicate_role_rejected():
    with pytest.raises(ValueError):
        schema(mediators=("w",))


def test_rule_covariates_must_be_baseline():
    with pytest.raises(ValueError):
        schema(rule_covariates=("m",))

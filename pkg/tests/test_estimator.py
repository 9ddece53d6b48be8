import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from biasaudit import AttributeSchema, BiasAuditor, Effect, SimSpec, simulate
from biasaudit.exceptions import ValidationError

SCHEMA = AttributeSchema([("hair", ["bald", "straight"]), ("age", ["young", "old", "child"])])


def test_fit_on_table():
    table = simulate(SimSpec(SCHEMA, 0.6, 0.05, 40, 0, [Effect("hair", "bald", 0.06)]))
    est = BiasAuditor(alpha=0.01).fit(table)
    assert est.attributes_ == ["hair.bald", "hair.straight", "age.young", "age.old", "age.child"]
    assert est.significant_attributes()[:2] == ["hair.bald", "hair.straight"]
    assert est.brisk_[0] == pytest.approx(-est.brisk_[1], abs=1e-15)
    assert est.n_tests_ == 5 and est.threshold_ == pytest.approx(0.002)
    assert np.all(est.p_values_ >= 0)
    assert len(est.summary()) == 5


def test_fit_on_raw_arrays():
    table = simulate(SimSpec(SCHEMA, 0.6, 0.05, 10, 1))
    names = [[SCHEMA.groups[g].labels[i] for g, i in enumerate(row)] for row in table.assignments]
    a = BiasAuditor(schema=SCHEMA).fit(names, table.scores)
    b = BiasAuditor().fit(table)
    np.testing.assert_array_equal(a.brisk_, b.brisk_)
    assert a.n_features_in_ == 2


def test_params_round_trip():
    est = BiasAuditor(alpha=0.05, compare="pairwise=young", max_skip=0.2)
    params = est.get_params()
    assert params["alpha"] == 0.05 and params["compare"] == "pairwise=young"
    assert clone(est).get_params() == params
    est.set_params(alpha=0.001)
    assert est.alpha == 0.001


def test_errors():
    with pytest.raises(NotFittedError):
        BiasAuditor().summary()
    with pytest.raises(ValidationError):
        BiasAuditor().fit([[0, 0]], [0.5])
    with pytest.raises(ValidationError):
        BiasAuditor(schema=SCHEMA).fit([[0, 0]])
    with pytest.raises(ValidationError):
        BiasAuditor(alpha=0).fit(simulate(SimSpec(SCHEMA, k=2)))


def test_unmeasurable_attributes_are_nan():
    est = BiasAuditor(schema=SCHEMA).fit([[0, 0], [1, 1]], [0.3, 0.4])
    assert np.isnan(est.p_values_).all()
    assert not est.significant_.any()

import math

import numpy as np
import pytest

from biasaudit import (
    AttributeSchema,
    AuditConfig,
    Effect,
    ScoreTable,
    SimSpec,
    compare_detectors,
    compare_test_strategies,
    correlate_with_proportions,
    run_audit,
    simulate,
    subsample_sweep,
)
from biasaudit.exceptions import InsufficientDataError, UndefinedCorrelationError, ValidationError
from biasaudit.stats import bonferroni

SCHEMA = AttributeSchema([("hair_type", ["bald", "straight", "wavy"]), ("gender", ["man", "woman"]),
                          ("age", ["child", "young", "old"])])


def planted(seed, beta=0.08):
    return simulate(SimSpec(SCHEMA, 0.7, 0.05, 50, seed, [Effect("hair_type", "bald", beta)]))


def test_three_label_planted_group():
    report = run_audit([planted(0)], AuditConfig())
    res = {r.attribute: r for _, r in report.results()}
    assert res["hair_type.bald"].significant and res["hair_type.bald"].bias.brisk > 0
    for sibling in ("hair_type.straight", "hair_type.wavy"):
        assert res[sibling].bias.brisk == pytest.approx(-0.04, abs=0.01)
    for other in ("gender.man", "gender.woman", "age.child", "age.young", "age.old"):
        assert not res[other].significant


def test_flags_recomputable():
    report = run_audit([planted(3), planted(4).rename("other")], AuditConfig(alpha=0.05))
    assert report.n_tests == 16
    assert report.threshold == bonferroni(0.05, 16)
    for _, r in report.results():
        assert r.significant == (r.ttest.p_value < report.threshold)


def test_m_override():
    report = run_audit([planted(1)], AuditConfig(n_tests=250))
    assert report.threshold == 4e-5
    with pytest.raises(ValidationError, match="smaller"):
        run_audit([planted(1)], AuditConfig(n_tests=3))
    with pytest.raises(ValidationError):
        AuditConfig(alpha=1.5)


def test_identical_tables_identical_blocks():
    table = planted(2)
    report = run_audit([table.rename("a"), table.rename("b")], AuditConfig())
    a, b = (t.to_dict() for t in report.tables)
    a.pop("detector"), b.pop("detector")
    assert a == b


def test_balanced_eod_column_matches_brisk():
    report = run_audit([planted(5)], AuditConfig())
    for _, r in report.results():
        assert abs(r.bias.eod - r.bias.brisk) <= 1e-9


def test_not_measurable_and_skip_limit():
    table = planted(6)
    bald = table.assignments[:, 0] == 0
    old = table.assignments[:, 2] == 2
    child_man = (table.assignments[:, 2] == 0) & (table.assignments[:, 1] == 0) & bald
    keep = ~(bald & old) & ~child_man
    report = run_audit([table.select(np.flatnonzero(keep))], AuditConfig(max_skip=0.1))
    status = {r.attribute: r.status for _, r in report.results()}
    assert status["hair_type.bald"] == "skip_limit"
    lone = ScoreTable(SCHEMA, [[0, 0, 0], [1, 1, 1]], [0.4, 0.5])
    report = run_audit([lone], AuditConfig())
    assert report.any_not_measurable
    assert report.n_tests == 0 and report.threshold is None


def test_insufficient_subgroups():
    schema = AttributeSchema([("x", ["on", "off"])])
    table = simulate(SimSpec(schema, k=10))
    report = run_audit([table], AuditConfig())
    assert {r.status for _, r in report.results()} == {"insufficient_subgroups"}


def test_pairwise_reference():
    table = planted(7)
    report = run_audit([table], AuditConfig(compare="pairwise=straight"))
    names = [r.attribute for _, r in report.results()]
    assert "hair_type.straight" not in names
    bald = next(r for _, r in report.results() if r.attribute == "hair_type.bald")
    assert bald.bias.brisk == pytest.approx(0.08, abs=0.01)


def test_attribute_filter_and_complements():
    config = AuditConfig(attributes=["bald", "gender.woman"])
    assert [r.attribute for _, r in run_audit([planted(8)], config).results()] == [
        "hair_type.bald", "gender.woman"]
    config = AuditConfig(skip_binary_complements=True)
    names = [r.attribute for _, r in run_audit([planted(8)], config).results()]
    assert "gender.woman" not in names and "gender.man" in names


def test_empty_report_set():
    report = run_audit([], AuditConfig())
    assert report.to_dict()["tables"] == []
    assert report.n_tests == 0


def test_compare_detectors():
    a = run_audit([planted(9).rename("a")])
    vec = a.tables[0].vector("brisk")
    flipped = {k: -v for k, v in vec.items()}
    m = compare_detectors({"a": vec, "dup": dict(vec), "neg": flipped})
    assert m.matrix[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert m.matrix[0, 2] == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ValidationError):
        compare_detectors({"a": vec})


def test_independent_null_detectors():
    face = AttributeSchema([("g1", ["a", "b", "c", "d", "e"]), ("g2", ["f", "g", "h", "i", "j"]),
                            ("g3", ["k", "l", "m", "n", "o"]), ("g4", ["p", "q", "r", "s", "t"]),
                            ("g5", ["u", "v", "w", "x", "y"])])
    small = 0
    for seed in range(20):
        t1 = simulate(SimSpec(face, 0.6, 0.1, 2, 2 * seed), "one")
        t2 = simulate(SimSpec(face, 0.6, 0.1, 2, 2 * seed + 1), "two")
        m = compare_detectors(run_audit([t1, t2]), "brisk")
        assert len(m.attributes) == 25
        small += abs(m.matrix[0, 1]) < 0.5
    assert small >= 19


def test_proportions():
    vec = {"a.x": 0.1, "a.y": -0.2, "b.z": 0.05}
    res, missing = correlate_with_proportions(vec, {"a.x": 0.3, "y": 0.0, "b.z": 0.25})
    assert res.coefficient == pytest.approx(1.0, abs=1e-12)
    assert missing == []
    with pytest.raises(UndefinedCorrelationError):
        correlate_with_proportions(vec, {"a.x": 0.5, "a.y": 0.5, "b.z": 0.5})
    with pytest.warns(UserWarning):
        with pytest.raises(InsufficientDataError):
            correlate_with_proportions(vec, {"a.x": 0.5})


def test_planted_proportion_relationship():
    schema = AttributeSchema([(f"g{i}", [f"g{i}a", f"g{i}b", f"g{i}c"]) for i in range(4)])
    rng = np.random.default_rng(0)
    props = {f"g{i}.g{i}{c}": float(rng.uniform()) for i in range(4) for c in "abc"}
    effects = [Effect(n.split(".")[0], n.split(".")[1], 0.1 * (p - 0.5)) for n, p in props.items()]
    table = simulate(SimSpec(schema, 0.5, 0.02, 20, 1, effects))
    res, _ = correlate_with_proportions(run_audit([table]).tables[0].vector(), props)
    assert res.coefficient > 0.9


def test_strategy_comparison_null():
    table = simulate(SimSpec(SCHEMA, 0.6, 0.1, 30, 11))
    rows = compare_test_strategies(table)
    assert len(rows) == 8
    gaps = [r.gap for r in rows]
    assert gaps == sorted(gaps, reverse=True)
    assert sum(r.paired.p_value < 0.01 or r.classical.p_value < 0.01 for r in rows) <= 1


def test_strategy_single_subgroup():
    schema = AttributeSchema([("x", ["on", "off"])])
    table = simulate(SimSpec(schema, 0.5, 0.1, 40, 2, [Effect("x", "on", 0.08)]))
    (row,) = compare_test_strategies(table, ["on"])
    assert row.paired_fallback
    assert (row.classical.p_value < 0.01) == (row.paired.p_value < 0.01)
    assert row.classical.p_value == pytest.approx(row.paired.p_value, rel=1e-12)


def test_sweep_fraction_one_and_exclusions():
    table = planted(12)
    sweep = subsample_sweep(table, [1.0, 0.002], repetitions=5, seed=1)
    full, tiny = sweep.points
    assert full.std == 0.0 and full.mean == sweep.reference_eod
    assert tiny.excluded_attributes > 0
    d = sweep.to_dict()
    assert d["points"][0]["std_abs_eod"] == 0.0
    with pytest.raises(ValidationError):
        subsample_sweep(table, [0.0])


def test_sweep_failed_repetitions():
    table = simulate(SimSpec(AttributeSchema([("x", ["on", "off"])]), k=2))
    sweep = subsample_sweep(table, [0.25], repetitions=10, seed=3)
    point = sweep.points[0]
    assert point.failed_repetitions == 10
    assert point.mean is None and point.std is None
    assert math.isfinite(sweep.reference_eod)

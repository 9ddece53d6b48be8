"""End-to-end audits over one or more score tables."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .exceptions import InsufficientDataError, NotMeasurableError, ValidationError
from .metrics import LITERAL, SIGNED, AttributeBias, _check_mode, attribute_bias, eod, subgroup_deltas
from .schema import AttributeRef, AttributeSchema
from .scores import ScoreTable
from .simulate import subsample
from .stats import (
    PEARSON,
    CorrelationResult,
    TTestResult,
    bonferroni,
    correlation,
    correlation_matrix,
    paired_ttest,
    two_sample_ttest,
)
from .validation import POSITIVE, check_alpha, check_class_label, check_fraction

logger = logging.getLogger(__name__)

OK = "ok"
NOT_MEASURABLE = "not_measurable"
SKIP_LIMIT = "skip_limit"
INSUFFICIENT = "insufficient_subgroups"


@dataclass(frozen=True)
class AuditConfig:
    """Options of an audit run.

    ``compare`` is ``"pooled"`` (absent = every other label of the group) or
    ``"pairwise=LABEL"``: attributes sharing LABEL's group are compared
    against LABEL only, attributes of other groups stay pooled.
    ``eod_threshold=None`` reports the threshold-integrated EOD only.
    """

    alpha: float = 0.01
    n_tests: int | None = None
    brisk_star_mode: str = SIGNED
    eod_threshold: float | None = None
    compare: str = "pooled"
    max_skip: float = 0.1
    attributes: tuple | None = None
    skip_binary_complements: bool = False
    class_label: str = POSITIVE
    seed: int = 0

    def __post_init__(self):
        check_alpha(self.alpha)
        object.__setattr__(self, "brisk_star_mode", _check_mode(self.brisk_star_mode))
        check_class_label(self.class_label)
        if self.n_tests is not None and (not isinstance(self.n_tests, int) or self.n_tests < 1):
            raise ValidationError(f"n_tests must be a positive integer, got {self.n_tests!r}")
        if not 0.0 <= self.max_skip <= 1.0:
            raise ValidationError(f"max_skip must lie in [0, 1], got {self.max_skip}")
        if self.eod_threshold is not None and not 0.0 <= self.eod_threshold <= 1.0:
            raise ValidationError(f"EOD threshold must lie in [0, 1], got {self.eod_threshold}")
        if self.compare != "pooled" and not self.compare.startswith("pairwise="):
            raise ValidationError(f"compare must be 'pooled' or 'pairwise=LABEL', got {self.compare!r}")
        if self.attributes is not None:
            object.__setattr__(self, "attributes", tuple(self.attributes))

    def reference(self, schema: AttributeSchema):
        if self.compare == "pooled":
            return None
        return schema.ref(self.compare.split("=", 1)[1])

    def select_attributes(self, schema: AttributeSchema):
        ref = self.reference(schema)
        if self.attributes is not None:
            attrs = [schema.ref(a) for a in self.attributes]
        else:
            attrs = [a for a in schema.attributes()
                     if not (self.skip_binary_complements and schema.radices[a.group] == 2 and a.label == 1)]
        if ref is not None:
            attrs = [a for a in attrs if a != ref]
        return attrs, ref

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "n_tests": self.n_tests,
            "brisk_star_mode": self.brisk_star_mode,
            "eod_threshold": self.eod_threshold,
            "compare": self.compare,
            "max_skip": self.max_skip,
            "attributes": list(self.attributes) if self.attributes is not None else None,
            "skip_binary_complements": self.skip_binary_complements,
            "class": self.class_label,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class AttributeResult:
    attribute: str
    group: str
    label: str
    status: str
    bias: AttributeBias | None = None
    ttest: TTestResult | None = None
    significant: bool = False
    message: str = ""

    def value(self, metric):
        if self.bias is None:
            return None
        return getattr(self.bias, metric)

    def to_dict(self):
        return {
            "attribute": self.attribute,
            "group": self.group,
            "label": self.label,
            "status": self.status,
            "message": self.message,
            "significant": self.significant,
            "bias": self.bias.to_dict() if self.bias is not None else None,
            "ttest": self.ttest.to_dict() if self.ttest is not None else None,
        }


@dataclass(frozen=True)
class TableReport:
    detector: str
    dataset: str
    n_records: int
    n_class_records: int
    results: tuple

    def vector(self, metric="brisk"):
        return {r.attribute: r.value(metric) for r in self.results}

    def to_dict(self):
        return {
            "detector": self.detector,
            "dataset": self.dataset,
            "n_records": self.n_records,
            "n_class_records": self.n_class_records,
            "attributes": [r.to_dict() for r in self.results],
        }


@dataclass(frozen=True)
class BiasReportSet:
    """Per-table, per-attribute results plus the Bonferroni accounting.

    ``significant`` on every result equals ``p_value < threshold``.
    """

    config: dict
    n_tests: int
    threshold: float | None
    tables: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def alpha(self):
        return self.config["alpha"]

    @property
    def any_not_measurable(self):
        return any(r.status == NOT_MEASURABLE for t in self.tables for r in t.results)

    def results(self):
        for t in self.tables:
            for r in t.results:
                yield t, r

    def to_dict(self):
        return {
            "metadata": dict(self.metadata),
            "config": self.config,
            "n_tests": self.n_tests,
            "threshold": self.threshold,
            "tables": [t.to_dict() for t in self.tables],
        }


def _audit_attribute(table, attr, ref, config):
    schema = table.schema
    g = schema.groups[attr.group]
    base = dict(attribute=schema.qualified_name(attr), group=g.name, label=g.labels[attr.label])
    reference = ref.label if ref is not None and ref.group == attr.group else None
    try:
        bias = attribute_bias(table, attr, config.class_label, reference, config.eod_threshold)
    except NotMeasurableError as exc:
        return AttributeResult(status=NOT_MEASURABLE, message=str(exc), **base)
    if bias.skip_fraction > config.max_skip:
        return AttributeResult(
            status=SKIP_LIMIT, bias=bias,
            message=f"{bias.subgroups_skipped} of {bias.subgroups_used + bias.subgroups_skipped} "
                    f"subgroups skipped, above the limit {config.max_skip}",
            **base)
    try:
        test = paired_ttest(bias.subgroup_deltas)
    except InsufficientDataError as exc:
        return AttributeResult(status=INSUFFICIENT, bias=bias, message=str(exc), **base)
    return AttributeResult(status=OK, bias=bias, ttest=test, **base)


def audit_table(table: ScoreTable, config: AuditConfig) -> TableReport:
    """Per-attribute results for one table, before multiple-testing correction."""
    attrs, ref = config.select_attributes(table.schema)
    results = tuple(_audit_attribute(table, a, ref, config) for a in attrs)
    return TableReport(table.detector, table.dataset, len(table),
                       int(table.class_mask(config.class_label).sum()), results)


def apply_bonferroni(reports, config: AuditConfig):
    """Flag results whose p-value is below ``alpha / m``; returns ``(reports, m, threshold)``."""
    executed = sum(r.ttest is not None for t in reports for r in t.results)
    m = executed if config.n_tests is None else config.n_tests
    if m < executed:
        raise ValidationError(f"n_tests={m} is smaller than the {executed} tests executed")
    threshold = bonferroni(config.alpha, m) if m >= 1 else None
    flagged = []
    for t in reports:
        results = tuple(
            replace(r, significant=bool(r.ttest is not None and r.ttest.p_value < threshold))
            for r in t.results)
        flagged.append(replace(t, results=results))
    return tuple(flagged), m, threshold


def run_audit(tables, config: AuditConfig | None = None, metadata=None) -> BiasReportSet:
    """Audit every table; attributes in schema order, tables in the given order."""
    config = config or AuditConfig()
    tables = list(tables)
    if tables:
        schema = tables[0].schema
        if any(t.schema != schema for t in tables):
            raise ValidationError("all score tables must share one schema")
    reports = [audit_table(t, config) for t in tables]
    reports, m, threshold = apply_bonferroni(reports, config)
    meta = {"tool": "biasaudit", "version": __version__}
    meta.update(metadata or {})
    n_flagged = sum(r.significant for t in reports for r in t.results)
    logger.info("audited %d table(s), %d test(s), %d significant", len(reports), m, n_flagged)
    return BiasReportSet(config.to_dict(), m, threshold, reports, meta)


# -- cross-table analyses -------------------------------------------------

@dataclass(frozen=True)
class CorrelationMatrix:
    names: tuple
    attributes: tuple
    matrix: np.ndarray
    metric: str
    method: str
    dropped: tuple = ()

    def to_dict(self):
        return {
            "metric": self.metric,
            "method": self.method,
            "detectors": list(self.names),
            "attributes": list(self.attributes),
            "dropped_attributes": list(self.dropped),
            "matrix": self.matrix.tolist(),
        }


def bias_vectors(reports, metric="brisk"):
    """``{table name: {attribute: value}}`` from a report set or ``{name: {attr: value}}``."""
    if isinstance(reports, BiasReportSet):
        out = {}
        for t in reports.tables:
            if t.detector in out:
                raise ValidationError(f"duplicate detector name {t.detector!r}")
            out[t.detector] = t.vector(metric)
        return out
    return {k: dict(v) for k, v in reports.items()}


def compare_detectors(reports, metric="brisk", method=PEARSON) -> CorrelationMatrix:
    """Correlation between detectors' per-attribute bias vectors."""
    if metric not in ("brisk", "brisk_star"):
        raise ValidationError(f"metric must be 'brisk' or 'brisk_star', got {metric!r}")
    vectors = bias_vectors(reports, metric)
    if len(vectors) < 2:
        raise ValidationError("detector comparison needs at least two detectors")
    names = list(vectors)
    attrs = list(vectors[names[0]])
    for n in names[1:]:
        if list(vectors[n]) != attrs:
            raise ValidationError(f"attribute set of {n!r} differs from {names[0]!r}")
    keep = [a for a in attrs if all(vectors[n][a] is not None for n in names)]
    dropped = tuple(a for a in attrs if a not in keep)
    if dropped:
        warnings.warn(f"attributes without a value in every detector dropped: {', '.join(dropped)}",
                      stacklevel=2)
    _, mat = correlation_matrix({n: [vectors[n][a] for a in keep] for n in names}, method)
    return CorrelationMatrix(tuple(names), tuple(keep), mat, metric, method, dropped)


def _lookup_proportion(proportions, attribute):
    if attribute in proportions:
        return proportions[attribute]
    return proportions.get(attribute.split(".", 1)[-1])


def correlate_with_proportions(bias, proportions, method=PEARSON):
    """Correlation of per-attribute bias with training-set attribute proportions.

    Returns ``(CorrelationResult, missing)``; attributes absent from
    ``proportions`` (or without a bias value) are listed in ``missing``.
    """
    xs, ys, missing = [], [], []
    for attr, value in bias.items():
        p = _lookup_proportion(proportions, attr)
        if p is None or value is None:
            missing.append(attr)
            continue
        xs.append(value)
        ys.append(p)
    if missing:
        warnings.warn(f"excluded from proportion correlation: {', '.join(missing)}", stacklevel=2)
    if len(xs) < 2:
        raise InsufficientDataError("fewer than 2 attributes overlap with the proportions")
    return correlation(xs, ys, method), missing


@dataclass(frozen=True)
class StrategyComparison:
    attribute: str
    classical: TTestResult | None
    paired: TTestResult | None
    paired_fallback: bool = False
    message: str = ""

    @property
    def gap(self):
        if self.classical is None or self.paired is None:
            return -math.inf
        return self.classical.p_value - self.paired.p_value

    def to_dict(self):
        return {
            "attribute": self.attribute,
            "classical_p": None if self.classical is None else self.classical.p_value,
            "paired_p": None if self.paired is None else self.paired.p_value,
            "gap": None if not math.isfinite(self.gap) else self.gap,
            "paired_fallback": self.paired_fallback,
            "classical": None if self.classical is None else self.classical.to_dict(),
            "paired": None if self.paired is None else self.paired.to_dict(),
            "message": self.message,
        }


def compare_test_strategies(table: ScoreTable, attrs=None, class_label=POSITIVE, reference=None):
    """Classical (pooled Welch) vs subgroup-paired p-values per attribute.

    Sorted by descending ``classical - paired`` gap.  With a single usable
    subgroup the paired strategy has nothing to pair and falls back to the
    Welch test inside that subgroup (``paired_fallback=True``).
    """
    schema = table.schema
    if attrs is None:
        attrs = schema.attributes()
    attrs = [schema.ref(a) if isinstance(a, str) else a for a in attrs]
    out = []
    for attr in attrs:
        name = schema.qualified_name(attr)
        part = table.partition(attr, class_label, reference)
        try:
            if not part.present or not part.absent:
                raise NotMeasurableError(name)
            s = table.scores
            p_all = s[np.concatenate(list(part.present.values()))]
            a_all = s[np.concatenate(list(part.absent.values()))]
            classical = two_sample_ttest(p_all, a_all)
            used = part.used()
            if len(used) == 1:
                c = used[0]
                paired = two_sample_ttest(s[part.present[c]], s[part.absent[c]])
                out.append(StrategyComparison(name, classical, paired, paired_fallback=True))
            else:
                deltas, _, _ = subgroup_deltas(table, attr, class_label, reference)
                out.append(StrategyComparison(name, classical, paired_ttest(deltas)))
        except (NotMeasurableError, InsufficientDataError) as exc:
            out.append(StrategyComparison(name, None, None, message=str(exc)))
    return sorted(out, key=lambda c: -c.gap)


@dataclass(frozen=True)
class SweepPoint:
    fraction: float
    mean: float | None
    std: float | None
    values: tuple
    failed_repetitions: int
    excluded_attributes: int

    def to_dict(self):
        return {
            "fraction": self.fraction,
            "mean_abs_eod": self.mean,
            "std_abs_eod": self.std,
            "values": list(self.values),
            "failed_repetitions": self.failed_repetitions,
            "excluded_attributes": self.excluded_attributes,
        }


@dataclass(frozen=True)
class SweepResult:
    points: tuple
    repetitions: int
    seed: int
    reference_brisk: float | None
    reference_eod: float | None

    def to_dict(self):
        return {
            "repetitions": self.repetitions,
            "seed": self.seed,
            "reference_mean_abs_brisk": self.reference_brisk,
            "reference_mean_abs_eod": self.reference_eod,
            "points": [p.to_dict() for p in self.points],
        }


def _mean_abs_eod(table, attrs, class_label):
    values, excluded = [], 0
    for a in attrs:
        try:
            values.append(abs(eod(table, a, None, class_label)))
        except NotMeasurableError:
            excluded += 1
    return (math.fsum(values) / len(values) if values else None), excluded


def subsample_sweep(table: ScoreTable, fractions, repetitions=20, seed=0, attrs=None,
                    class_label=POSITIVE) -> SweepResult:
    """Attribute-averaged |EOD| over repeated subsamples at each fraction."""
    fractions = [check_fraction(f) for f in fractions]
    if repetitions < 1:
        raise ValidationError("repetitions must be >= 1")
    schema = table.schema
    attrs = schema.attributes() if attrs is None else [schema.ref(a) if isinstance(a, str) else a for a in attrs]

    ref_eod, _ = _mean_abs_eod(table, attrs, class_label)
    briskes = []
    for a in attrs:
        try:
            briskes.append(abs(attribute_bias(table, a, class_label).brisk))
        except NotMeasurableError:
            pass
    ref_brisk = math.fsum(briskes) / len(briskes) if briskes else None

    points = []
    for fi, frac in enumerate(fractions):
        values, failed, excluded = [], 0, 0
        for rep in range(repetitions):
            sub = subsample(table, frac, [seed, fi, rep])
            value, n_excl = _mean_abs_eod(sub, attrs, class_label)
            excluded += n_excl
            if value is None:
                failed += 1
            else:
                values.append(value)
        if values and len(set(values)) == 1:
            mean, std = values[0], 0.0
        elif values:
            mean = math.fsum(values) / len(values)
            std = float(np.std(values, ddof=1))
        else:
            mean = std = None
        points.append(SweepPoint(frac, mean, std, tuple(values), failed, excluded))
    return SweepResult(tuple(points), repetitions, seed, ref_brisk, ref_eod)


__all__ = [
    "AttributeResult", "AuditConfig", "BiasReportSet", "CorrelationMatrix", "LITERAL", "SIGNED",
    "StrategyComparison", "SweepResult", "TableReport", "apply_bonferroni", "audit_table",
    "bias_vectors", "compare_detectors", "compare_test_strategies", "correlate_with_proportions",
    "run_audit", "subsample_sweep",
]

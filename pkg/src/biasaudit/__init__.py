"""Attribute-conditioned bias auditing for binary classifiers."""

__version__ = "0.1.0"

from .audit import (  # noqa: E402
    AuditConfig,
    BiasReportSet,
    compare_detectors,
    compare_test_strategies,
    correlate_with_proportions,
    run_audit,
    subsample_sweep,
)
from .estimator import BiasAuditor  # noqa: E402
from .metrics import (  # noqa: E402
    AttributeBias,
    DeltaCurve,
    attribute_bias,
    averaged_delta_curve,
    brisk,
    brisk_star,
    classwise_rate_delta,
    delta_curve,
    eod,
    integrate_delta,
)
from .schema import AttributeRef, AttributeSchema, face_attribute_schema, load_schema  # noqa: E402
from .scores import ScoreTable, bucket, load_scores, mean_score, tpr_step  # noqa: E402
from .simulate import Effect, SimSpec, analytic_brisk, simulate, subsample  # noqa: E402
from .stats import (  # noqa: E402
    bonferroni,
    correlation,
    correlation_matrix,
    paired_ttest,
    student_t_sf,
    two_sample_ttest,
)

__all__ = [
    "AttributeBias", "AttributeRef", "AttributeSchema", "AuditConfig", "BiasAuditor",
    "BiasReportSet", "DeltaCurve", "Effect", "ScoreTable", "SimSpec", "analytic_brisk",
    "attribute_bias", "averaged_delta_curve", "bonferroni", "brisk", "brisk_star", "bucket",
    "classwise_rate_delta", "compare_detectors", "compare_test_strategies",
    "correlate_with_proportions", "correlation", "correlation_matrix", "delta_curve", "eod",
    "face_attribute_schema", "integrate_delta", "load_schema", "load_scores", "mean_score",
    "paired_ttest", "run_audit", "simulate", "student_t_sf", "subsample", "subsample_sweep",
    "tpr_step", "two_sample_ttest",
]

"""scikit-learn style front end to the single-table audit."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .audit import AuditConfig, apply_bonferroni, audit_table
from .exceptions import ValidationError
from .scores import ScoreTable


class BiasAuditor(BaseEstimator):
    """Audit the attribute-conditioned bias of one classifier's scores.

    Parameters
    ----------
    schema : AttributeSchema, optional
        Required when ``fit`` receives raw label assignments rather than a
        :class:`ScoreTable`.
    alpha : float, default=0.01
        Family-wise significance level before Bonferroni correction.
    n_tests : int, optional
        Bonferroni denominator; defaults to the number of executed tests.
    brisk_star_mode : {"signed", "literal"}, default="signed"
    eod_threshold : float, optional
        Also report the pooled rate difference at this threshold.
    compare : str, default="pooled"
        ``"pooled"`` or ``"pairwise=LABEL"``.
    max_skip : float, default=0.1
        Largest tolerated fraction of subgroups missing a side.
    attributes : sequence of str, optional
        Attribute names to audit; all labels by default.
    skip_binary_complements : bool, default=False
        Audit only the first label of two-label groups (the second is the
        same test with the sign flipped).
    class_label : {"synthetic", "real"}, default="synthetic"

    Attributes
    ----------
    report_ : TableReport
    attributes_ : list of str
    brisk_, brisk_star_, eod_, p_values_ : ndarray of shape (n_attributes,)
        NaN where the attribute could not be measured or tested.
    significant_ : ndarray of bool
    n_tests_ : int
    threshold_ : float or None
    """

    def __init__(self, schema=None, alpha=0.01, n_tests=None, brisk_star_mode="signed",
                 eod_threshold=None, compare="pooled", max_skip=0.1, attributes=None,
                 skip_binary_complements=False, class_label="synthetic"):
        self.schema = schema
        self.alpha = alpha
        self.n_tests = n_tests
        self.brisk_star_mode = brisk_star_mode
        self.eod_threshold = eod_threshold
        self.compare = compare
        self.max_skip = max_skip
        self.attributes = attributes
        self.skip_binary_complements = skip_binary_complements
        self.class_label = class_label

    def _config(self):
        return AuditConfig(
            alpha=self.alpha, n_tests=self.n_tests, brisk_star_mode=self.brisk_star_mode,
            eod_threshold=self.eod_threshold, compare=self.compare, max_skip=self.max_skip,
            attributes=self.attributes, skip_binary_complements=self.skip_binary_complements,
            class_label=self.class_label,
        )

    def fit(self, X, y=None, sample_class=None):
        """Compute every metric and test.

        ``X`` is a :class:`ScoreTable`, or label assignments of shape
        ``(n_samples, n_groups)`` (names or indices) with scores ``y`` and
        optional per-sample class labels.
        """
        if isinstance(X, ScoreTable):
            if self.schema is not None and X.schema != self.schema:
                raise ValidationError("table schema differs from the estimator's schema")
            table = X
        else:
            if self.schema is None:
                raise ValidationError("schema is required when fitting on raw assignments")
            if y is None:
                raise ValidationError("scores y are required when fitting on raw assignments")
            table = ScoreTable(self.schema, X, y, sample_class)
        config = self._config()
        (report,), m, threshold = apply_bonferroni([audit_table(table, config)], config)

        def column(getter):
            return np.array([np.nan if (v := getter(r)) is None else v for r in report.results])

        self.report_ = report
        self.attributes_ = [r.attribute for r in report.results]
        self.brisk_ = column(lambda r: r.value("brisk"))
        star = "brisk_star" if config.brisk_star_mode == "signed" else "brisk_star_literal"
        self.brisk_star_ = column(lambda r: r.value(star))
        self.eod_ = column(lambda r: r.value("eod"))
        self.p_values_ = column(lambda r: None if r.ttest is None else r.ttest.p_value)
        self.significant_ = np.array([r.significant for r in report.results], dtype=bool)
        self.n_tests_ = m
        self.threshold_ = threshold
        self.n_features_in_ = table.schema.n_groups
        return self

    def significant_attributes(self):
        check_is_fitted(self, "report_")
        return [a for a, s in zip(self.attributes_, self.significant_) if s]

    def summary(self):
        """One dict per audited attribute."""
        check_is_fitted(self, "report_")
        return [r.to_dict() for r in self.report_.results]

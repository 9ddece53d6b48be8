"""Threshold-resolved and threshold-integrated detection-rate differences.

For an attribute, every subgroup (a fixed assignment of all other groups)
yields a difference curve ``rate(present, t) - rate(absent, t)``.  The
curves are step functions of the threshold, so averages, integrals and
extrema are computed exactly over their breakpoints.

Because scores live in [0, 1], ``integral_0^1 P(S >= t) dt = E[S]`` and the
integrated difference of one subgroup is a difference of mean scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyBucketError, NotMeasurableError, ValidationError
from .schema import AttributeRef
from .scores import ScoreTable, TprStep, mean_score, tpr_step
from .validation import NEGATIVE, POSITIVE, check_class_label

SIGNED = "signed"
LITERAL = "literal"
_MODE_ALIASES = {"signed": SIGNED, "signed_extremum": SIGNED, "literal": LITERAL, "literal_max": LITERAL}


@dataclass(frozen=True)
class DeltaCurve:
    """Piecewise-constant function on [0, 1].

    ``values[j]`` is the value on ``(knots[j-1], knots[j]]``; ``values[0]``
    is the value at ``t = 0``.  ``knots`` always starts at 0 and ends at 1.
    """

    knots: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        j = np.searchsorted(self.knots, t, side="left")
        out = np.where(t > 1.0, 0.0, self.values[np.minimum(j, len(self.values) - 1)])
        return float(out) if out.ndim == 0 else out

    def integral(self) -> float:
        return math.fsum((np.diff(self.knots) * self.values[1:]).tolist())

    def extremum(self, mode=SIGNED):
        """``(value, threshold)`` of the largest value (``literal``) or the
        largest magnitude with its sign (``signed``).  The threshold is the
        left end of the first interval attaining it."""
        mode = _check_mode(mode)
        j = int(np.argmax(self.values if mode == LITERAL else np.abs(self.values)))
        return float(self.values[j]), float(self.knots[j - 1]) if j else 0.0

    def __neg__(self):
        return DeltaCurve(self.knots, -self.values)


def _check_mode(mode):
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValidationError(f"unknown brisk-star mode {mode!r}") from None


def _as_step(side) -> TprStep:
    return side if isinstance(side, TprStep) else tpr_step(side)


def delta_curve(present, absent) -> DeltaCurve:
    """Exact difference of two empirical detection-rate curves."""
    p, a = _as_step(present), _as_step(absent)
    knots = np.union1d(np.union1d(p.thresholds, a.thresholds), [0.0, 1.0])
    return DeltaCurve(knots, p(knots) - a(knots))


def integrate_delta(curve: DeltaCurve) -> float:
    return curve.integral()


# -- subgroup machinery ---------------------------------------------------

@dataclass(frozen=True)
class _Split:
    name: str
    used: list
    present_idx: list = field(repr=False)
    absent_idx: list = field(repr=False)
    n_subgroups: int
    sign: float


def _split(table: ScoreTable, attr: AttributeRef, class_label, reference, rate) -> _Split:
    check_class_label(class_label)
    if rate not in ("correct", "detection"):
        raise ValidationError(f"rate must be 'correct' or 'detection', got {rate!r}")
    if not table.class_mask(class_label).any():
        raise ValidationError(f"table has no {class_label!r} records")
    part = table.partition(attr, class_label, reference)
    used = part.used()
    name = table.schema.qualified_name(attr)
    if not used:
        raise NotMeasurableError(name)
    # a negative is classified correctly when its score falls below t
    sign = -1.0 if (class_label == NEGATIVE and rate == "correct") else 1.0
    return _Split(name, used, [part.present[c] for c in used], [part.absent[c] for c in used],
                  part.n_subgroups, sign)


def subgroup_deltas(table, attr, class_label=POSITIVE, reference=None, rate="correct"):
    """Integrated difference of every usable subgroup, in subgroup-code order.

    Returns ``(deltas, codes, n_subgroups)``.
    """
    sp = _split(table, attr, class_label, reference, rate)
    s = table.scores
    deltas = np.array([mean_score(s[p]) - mean_score(s[a])
                       for p, a in zip(sp.present_idx, sp.absent_idx)])
    if sp.sign < 0:
        deltas = -deltas
    return deltas, np.asarray(sp.used, dtype=np.int64), sp.n_subgroups


def _averaged_curve(table, sp: _Split) -> DeltaCurve:
    n_used = len(sp.used)
    idx = np.concatenate(sp.present_idx + sp.absent_idx)
    w = np.concatenate(
        [np.full(len(p), 1.0 / (n_used * len(p))) for p in sp.present_idx]
        + [np.full(len(a), -1.0 / (n_used * len(a))) for a in sp.absent_idx]
    )
    s = table.scores[idx]
    # fixed (score, record) order keeps sums identical when sides are swapped
    order = np.lexsort((idx, s))
    s, w = s[order], w[order]
    tail = np.concatenate((np.cumsum(w[::-1])[::-1], [0.0]))
    knots = np.union1d(s, [0.0, 1.0])
    values = tail[np.searchsorted(s, knots, side="left")]
    values[0] = 0.0  # every rate is 1 at t = 0
    return DeltaCurve(knots, sp.sign * values)


def averaged_delta_curve(table, attr, class_label=POSITIVE, reference=None, rate="correct") -> DeltaCurve:
    """Pointwise mean of the per-subgroup difference curves over usable subgroups."""
    return _averaged_curve(table, _split(table, attr, class_label, reference, rate))


def brisk(table, attr, class_label=POSITIVE, reference=None) -> float:
    """Threshold-integrated, subgroup-averaged rate difference."""
    deltas, _, _ = subgroup_deltas(table, attr, class_label, reference)
    return math.fsum(deltas.tolist()) / len(deltas)


def brisk_star(table, attr, mode=SIGNED, class_label=POSITIVE, reference=None):
    """Extremum of the averaged difference curve: ``(value, threshold)``."""
    return averaged_delta_curve(table, attr, class_label, reference).extremum(mode)


def eod(table, attr, threshold=None, class_label=POSITIVE, reference=None, rate="correct") -> float:
    """Pooled rate difference ignoring subgroups.

    ``threshold=None`` integrates over all thresholds (difference of pooled
    mean scores); a number evaluates the difference at that threshold.
    """
    check_class_label(class_label)
    part = table.partition(attr, class_label, reference)
    name = table.schema.qualified_name(attr)
    if not part.present or not part.absent:
        raise NotMeasurableError(name, f"attribute {name!r}: a pooled side has no "
                                       f"{class_label!r} records")
    s = table.scores
    p = s[np.concatenate(list(part.present.values()))]
    a = s[np.concatenate(list(part.absent.values()))]
    if threshold is None:
        value = mean_score(p) - mean_score(a)
    else:
        t = float(threshold)
        value = float(np.mean(p >= t)) - float(np.mean(a >= t))
    if class_label == NEGATIVE and rate == "correct":
        value = -value
    return value


@dataclass(frozen=True)
class AttributeBias:
    """All bias quantities for one attribute of one table."""

    attribute: str
    class_label: str
    brisk: float
    brisk_star: float
    brisk_star_threshold: float
    brisk_star_literal: float
    brisk_star_literal_threshold: float
    eod: float
    subgroup_deltas: np.ndarray = field(repr=False)
    subgroups_used: int
    subgroups_skipped: int
    eod_threshold: float | None = None
    eod_at_threshold: float | None = None
    curve: DeltaCurve | None = field(default=None, repr=False, compare=False)

    @property
    def skip_fraction(self) -> float:
        return self.subgroups_skipped / (self.subgroups_used + self.subgroups_skipped)

    def to_dict(self):
        return {
            "attribute": self.attribute,
            "class": self.class_label,
            "brisk": self.brisk,
            "brisk_star": self.brisk_star,
            "brisk_star_threshold": self.brisk_star_threshold,
            "brisk_star_literal": self.brisk_star_literal,
            "brisk_star_literal_threshold": self.brisk_star_literal_threshold,
            "eod": self.eod,
            "eod_threshold": self.eod_threshold,
            "eod_at_threshold": self.eod_at_threshold,
            "subgroups_used": self.subgroups_used,
            "subgroups_skipped": self.subgroups_skipped,
            "subgroup_deltas": self.subgroup_deltas.tolist(),
        }


def attribute_bias(table, attr, class_label=POSITIVE, reference=None, eod_threshold=None) -> AttributeBias:
    """brisk, both brisk-star variants and EOD for one attribute in one pass."""
    sp = _split(table, attr, class_label, reference, "correct")
    s = table.scores
    deltas = np.array([mean_score(s[p]) - mean_score(s[a])
                       for p, a in zip(sp.present_idx, sp.absent_idx)]) * sp.sign
    curve = _averaged_curve(table, sp)
    signed, signed_t = curve.extremum(SIGNED)
    literal, literal_t = curve.extremum(LITERAL)
    return AttributeBias(
        attribute=sp.name,
        class_label=class_label,
        brisk=math.fsum(deltas.tolist()) / len(deltas),
        brisk_star=signed,
        brisk_star_threshold=signed_t,
        brisk_star_literal=literal,
        brisk_star_literal_threshold=literal_t,
        eod=eod(table, attr, None, class_label, reference),
        subgroup_deltas=deltas,
        subgroups_used=len(sp.used),
        subgroups_skipped=sp.n_subgroups - len(sp.used),
        eod_threshold=eod_threshold,
        eod_at_threshold=(None if eod_threshold is None
                          else eod(table, attr, eod_threshold, class_label, reference)),
        curve=curve,
    )


def classwise_rate_delta(table, attr, class_label, reference=None) -> AttributeBias:
    """Bias of the correct-classification rate of one class.

    Positives are correct when ``score >= t``, negatives when ``score < t``;
    applied to real (pristine) samples this measures attribute effects on
    false-alarm behaviour.
    """
    return attribute_bias(table, attr, class_label, reference)


__all__ = [
    "AttributeBias", "DeltaCurve", "EmptyBucketError", "attribute_bias", "averaged_delta_curve",
    "brisk", "brisk_star", "classwise_rate_delta", "delta_curve", "eod", "integrate_delta",
    "subgroup_deltas",
]

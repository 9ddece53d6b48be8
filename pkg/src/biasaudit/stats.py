"""t-tests, Bonferroni thresholds and correlation coefficients.

The Student-t tail is computed from the regularized incomplete beta
function, evaluated by its continued fraction (modified Lentz) with the
usual symmetry switch at ``x = (a + 1) / (a + b + 2)``.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np

from .exceptions import InsufficientDataError, UndefinedCorrelationError, ValidationError

_EPS = 1e-16
_TINY = 1e-300
_MAXIT = 100_000


def _stirling_tail(z):
    # lgamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2], asymptotic, z >= 10
    z2 = z * z
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * z2)) / z2) / z2) / z2) / z


def log_beta(a, b):
    """``ln B(a, b)`` without catastrophic cancellation for large arguments."""
    small, big = (a, b) if a <= b else (b, a)
    if big < 10.0:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    # lgamma(big + small) - lgamma(big) via Stirling, written in log1p form
    shift = ((big - 0.5) * math.log1p(small / big) + small * math.log(big + small) - small
             + _stirling_tail(big + small) - _stirling_tail(big))
    return math.lgamma(small) - shift


def _betacf(a, b, x):
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a, b, x, y=None):
    """Regularized incomplete beta ``I_x(a, b)``.

    ``y`` may carry ``1 - x`` computed without cancellation by the caller.
    """
    if y is None:
        y = 1.0 - x
    if not (a > 0 and b > 0):
        raise ValidationError("betainc requires a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"betainc argument {x} outside [0, 1]")
    if x == 0.0:
        return 0.0
    if y == 0.0:
        return 1.0
    log_x = math.log1p(-y) if x > 0.5 else math.log(x)
    log_y = math.log1p(-x) if y > 0.5 else math.log(y)
    front = math.exp(a * log_x + b * log_y - log_beta(a, b))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, y) / b


def student_t_sf(t, df):
    """Two-sided tail probability ``P(|T| >= |t|)`` for Student's t with ``df`` degrees of freedom."""
    if not isinstance(df, numbers.Real) or not df >= 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {df!r}")
    t = float(t)
    if math.isnan(t):
        raise ValidationError("t statistic is NaN")
    if math.isinf(t):
        return 0.0
    if t == 0.0:
        return 1.0
    t2 = t * t
    x = df / (df + t2)
    y = t2 / (df + t2)
    return min(1.0, max(0.0, betainc(df / 2.0, 0.5, x, y)))


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    degrees_of_freedom: float
    p_value: float
    n: int
    mean_diff: float
    degenerate: bool = False

    def to_dict(self):
        return {
            "t_statistic": self.t_statistic if math.isfinite(self.t_statistic) else None,
            "degrees_of_freedom": self.degrees_of_freedom,
            "p_value": self.p_value,
            "n": self.n,
            "mean_diff": self.mean_diff,
            "degenerate": self.degenerate,
        }


def _mean_var(values):
    v = [float(x) for x in values]
    if min(v) == max(v):  # exact zero variance despite rounding in the mean
        return v[0], 0.0
    mean = math.fsum(v) / len(v)
    var = math.fsum((x - mean) ** 2 for x in v) / (len(v) - 1)
    return mean, var


def paired_ttest(deltas) -> TTestResult:
    """One-sample t-test of per-subgroup differences against zero mean."""
    d = np.asarray(deltas, dtype=float).ravel()
    n = d.size
    if n < 2:
        raise InsufficientDataError(f"insufficient subgroups for a paired t-test (n={n}, need >= 2)")
    mean, var = _mean_var(d)
    df = n - 1
    if var == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, df, 1.0, n, mean, degenerate=True)
        return TTestResult(math.copysign(math.inf, mean), df, 0.0, n, mean, degenerate=True)
    t = mean / math.sqrt(var / n)
    return TTestResult(t, df, student_t_sf(t, df), n, mean)


def two_sample_ttest(group_a, group_b) -> TTestResult:
    """Welch's unequal-variance t-test, ignoring any pairing structure."""
    a = np.asarray(group_a, dtype=float).ravel()
    b = np.asarray(group_b, dtype=float).ravel()
    if a.size < 2 or b.size < 2:
        raise InsufficientDataError(f"two-sample t-test needs >= 2 values per group (got {a.size}, {b.size})")
    ma, va = _mean_var(a)
    mb, vb = _mean_var(b)
    diff = ma - mb
    qa, qb = va / a.size, vb / b.size
    se2 = qa + qb
    n = a.size + b.size
    if se2 == 0.0:
        df = float(n - 2)
        if diff == 0.0:
            return TTestResult(0.0, df, 1.0, n, diff, degenerate=True)
        return TTestResult(math.copysign(math.inf, diff), df, 0.0, n, diff, degenerate=True)
    df = se2 * se2 / (qa * qa / (a.size - 1) + qb * qb / (b.size - 1))
    t = diff / math.sqrt(se2)
    return TTestResult(t, df, student_t_sf(t, df), n, diff)


def bonferroni(alpha, m):
    """Per-test significance threshold controlling the family-wise error rate."""
    if not isinstance(alpha, numbers.Real) or not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    if isinstance(m, bool) or not isinstance(m, numbers.Integral) or m < 1:
        raise ValidationError(f"number of tests must be a positive integer, got {m!r}")
    return alpha / m


# -- correlation ----------------------------------------------------------

PEARSON = "pearson"
SPEARMAN = "spearman"


@dataclass(frozen=True)
class CorrelationResult:
    coefficient: float
    n: int
    method: str

    def to_dict(self):
        return {"coefficient": self.coefficient, "n": self.n, "method": self.method}


def rank_average(x):
    """Ranks starting at 1; tied values share the mean of their ranks."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(x.size)
    starts = np.flatnonzero(np.concatenate(([True], xs[1:] != xs[:-1])))
    ends = np.concatenate((starts[1:], [x.size]))
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = (s + e + 1) / 2.0
    return ranks


def _pearson(x, y):
    xc = x - math.fsum(x.tolist()) / x.size
    yc = y - math.fsum(y.tolist()) / y.size
    sxx = math.fsum((xc * xc).tolist())
    syy = math.fsum((yc * yc).tolist())
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("undefined correlation: input vector is constant")
    r = math.fsum((xc * yc).tolist()) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def correlation(x, y, method=PEARSON) -> CorrelationResult:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValidationError(f"correlation inputs differ in length ({x.size} vs {y.size})")
    if x.size < 2:
        raise InsufficientDataError("correlation needs at least 2 paired values")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValidationError("correlation inputs must be finite")
    if method == PEARSON:
        r = _pearson(x, y)
    elif method == SPEARMAN:
        r = _pearson(rank_average(x), rank_average(y))
    else:
        raise ValidationError(f"unknown correlation method {method!r}")
    return CorrelationResult(r, int(x.size), method)


def correlation_matrix(bias_vectors, method=PEARSON):
    """Pairwise correlation of named vectors: returns ``(names, matrix)``."""
    names = list(bias_vectors)
    vecs = [np.asarray(bias_vectors[k], dtype=float).ravel() for k in names]
    if vecs and any(v.size != vecs[0].size for v in vecs):
        raise ValidationError("bias vectors differ in length; attribute sets must match")
    k = len(names)
    mat = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            mat[i, j] = mat[j, i] = correlation(vecs[i], vecs[j], method).coefficient
    return names, mat

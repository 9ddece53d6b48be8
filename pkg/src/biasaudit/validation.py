"""Input checks shared by the table constructors and the estimator."""

import numbers

import numpy as np

from .exceptions import SchemaError, ValidationError

POSITIVE = "synthetic"
NEGATIVE = "real"
CLASS_LABELS = (POSITIVE, NEGATIVE)


def check_scores(scores, name="scores"):
    """Return ``scores`` as a 1-D float array of finite values in [0, 1]."""
    arr = np.asarray(scores, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"{name}[{i}] is not finite ({arr[i]!r})")
    out = (arr < 0.0) | (arr > 1.0)
    if out.any():
        i = int(np.flatnonzero(out)[0])
        raise ValidationError(f"{name}[{i}] = {arr[i]!r} is outside [0, 1]")
    return arr


def check_assignments(X, schema):
    """Coerce label assignments to an ``(n_samples, n_groups)`` int array.

    Accepts label indices or label names, columns in schema group order.
    """
    arr = np.asarray(X, dtype=object if _has_strings(X) else None)
    if arr.ndim == 1 and schema.n_groups == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[1] != schema.n_groups:
        raise ValidationError(
            f"assignments must have shape (n_samples, {schema.n_groups}), got {arr.shape}"
        )
    if arr.dtype == object:
        out = np.empty(arr.shape, dtype=np.int64)
        for gi, group in enumerate(schema.groups):
            lookup = {lab: i for i, lab in enumerate(group.labels)}
            for r, value in enumerate(arr[:, gi]):
                if isinstance(value, str):
                    try:
                        out[r, gi] = lookup[value]
                    except KeyError:
                        raise SchemaError(
                            f"unknown label {value!r} for group {group.name!r} (sample {r})"
                        ) from None
                else:
                    out[r, gi] = int(value)
        arr = out
    elif not np.issubdtype(arr.dtype, np.integer):
        if arr.size and not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValidationError("numeric assignments must be integer label indices")
        arr = arr.astype(np.int64)
    else:
        arr = arr.astype(np.int64, copy=True)
    radices = np.asarray(schema.radices)
    bad = (arr < 0) | (arr >= radices)
    if bad.any():
        r, g = map(int, np.argwhere(bad)[0])
        raise SchemaError(
            f"label index {arr[r, g]} out of range for group {schema.groups[g].name!r} (sample {r})"
        )
    return arr


def _has_strings(X):
    if isinstance(X, np.ndarray):
        return X.dtype.kind in "OUS"
    for row in X:
        values = row if isinstance(row, (list, tuple, np.ndarray)) else [row]
        return any(isinstance(v, str) for v in values)
    return False


def check_classes(classes, n):
    """Map class labels to a bool array, ``True`` for the positive (synthetic) class."""
    if classes is None:
        return np.ones(n, dtype=bool)
    arr = np.asarray(classes)
    if arr.shape != (n,):
        raise ValidationError(f"class labels must have shape ({n},), got {arr.shape}")
    if arr.dtype == bool:
        return arr.copy()
    out = np.empty(n, dtype=bool)
    for i, c in enumerate(arr):
        if c == POSITIVE or c is True or c == 1:
            out[i] = True
        elif c == NEGATIVE or c is False or c == 0:
            out[i] = False
        else:
            raise ValidationError(f"class label {c!r} at sample {i}: expected {POSITIVE!r} or {NEGATIVE!r}")
    return out


def check_class_label(class_label):
    if class_label not in CLASS_LABELS:
        raise ValidationError(f"class must be one of {CLASS_LABELS}, got {class_label!r}")
    return class_label


def check_fraction(p, name="fraction"):
    if not isinstance(p, numbers.Real) or not 0.0 < p <= 1.0:
        raise ValidationError(f"{name} must lie in (0, 1], got {p!r}")
    return float(p)


def check_alpha(alpha):
    if not isinstance(alpha, numbers.Real) or not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)

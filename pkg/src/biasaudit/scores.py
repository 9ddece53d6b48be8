"""Score tables: validated classifier scores indexed by attribute subgroup."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyBucketError, ScoreFileError, SchemaError, ValidationError
from .schema import AttributeRef, AttributeSchema
from .validation import (
    NEGATIVE,
    POSITIVE,
    check_assignments,
    check_class_label,
    check_classes,
    check_scores,
)

REQUIRED_COLUMNS = ("sample_id", "score", "class")


@dataclass(frozen=True)
class Partition:
    """Record indices of one attribute split by subgroup code and side.

    ``present[c]`` / ``absent[c]`` hold indices into the table for the
    subgroup with code ``c``; subgroups with no records on a side are
    missing from the corresponding dict.
    """

    attr: AttributeRef
    class_label: str
    reference: int | None
    n_subgroups: int
    present: dict = field(repr=False)
    absent: dict = field(repr=False)

    def used(self):
        """Codes of subgroups with both sides populated, ascending."""
        return sorted(self.present.keys() & self.absent.keys())


class ScoreTable:
    """Scores of one detector on one dataset, with label assignments.

    Arrays are validated on construction and frozen afterwards; the
    per-attribute bucket index is built lazily and cached.
    """

    def __init__(self, schema: AttributeSchema, assignments, scores, classes=None,
                 sample_ids=None, detector="detector", dataset="dataset", metadata=None):
        self.schema = schema
        self.scores = check_scores(scores)
        n = self.scores.shape[0]
        self.assignments = check_assignments(assignments, schema) if n else np.zeros((0, schema.n_groups), np.int64)
        if self.assignments.shape[0] != n:
            raise ValidationError(f"{self.assignments.shape[0]} assignments for {n} scores")
        self.positive = check_classes(classes, n)
        if sample_ids is None:
            sample_ids = [str(i) for i in range(n)]
        self.sample_ids = tuple(str(s) for s in sample_ids)
        if len(self.sample_ids) != n:
            raise ValidationError(f"{len(self.sample_ids)} sample ids for {n} scores")
        self.detector = detector
        self.dataset = dataset
        self.metadata = dict(metadata or {})
        for arr in (self.scores, self.assignments, self.positive):
            arr.setflags(write=False)
        self._codes = {}
        self._partitions = {}

    def __len__(self):
        return self.scores.shape[0]

    def __repr__(self):
        return (f"ScoreTable(detector={self.detector!r}, dataset={self.dataset!r}, "
                f"n={len(self)}, positives={int(self.positive.sum())})")

    @property
    def combination_codes(self):
        if "all" not in self._codes:
            self._codes["all"] = self.assignments @ np.asarray(self.schema.strides, dtype=np.int64)
        return self._codes["all"]

    def subgroup_codes(self, group: int):
        """Mixed-radix code of every record over all groups except ``group``."""
        if group not in self._codes:
            stride = self.schema.strides[group]
            radix = self.schema.radices[group]
            full = self.combination_codes
            self._codes[group] = (full // (stride * radix)) * stride + full % stride
        return self._codes[group]

    def class_mask(self, class_label=POSITIVE):
        check_class_label(class_label)
        return self.positive if class_label == POSITIVE else ~self.positive

    def partition(self, attr: AttributeRef, class_label=POSITIVE, reference=None) -> Partition:
        """Split the records of ``class_label`` by subgroup and presence of ``attr``.

        With ``reference`` (a label index in the same group) only records
        carrying that label form the absent side; otherwise every other
        label of the group is pooled.
        """
        self.schema.check_attribute(attr)
        if reference is not None:
            self.schema.check_attribute(AttributeRef(attr.group, reference))
            if reference == attr.label:
                raise ValidationError("reference label must differ from the attribute label")
        key = (attr, class_label, reference)
        if key in self._partitions:
            return self._partitions[key]

        labels = self.assignments[:, attr.group]
        is_present = labels == attr.label
        is_absent = ~is_present if reference is None else labels == reference
        idx = np.flatnonzero(self.class_mask(class_label) & (is_present | is_absent))
        gid = self.subgroup_codes(attr.group)[idx] * 2 + is_present[idx]
        order = np.argsort(gid, kind="stable")
        idx, gid = idx[order], gid[order]
        present, absent = {}, {}
        if idx.size:
            cuts = np.flatnonzero(np.diff(gid)) + 1
            for chunk_ids, chunk in zip(np.split(gid, cuts), np.split(idx, cuts)):
                code, side = divmod(int(chunk_ids[0]), 2)
                chunk.setflags(write=False)
                (present if side else absent)[code] = chunk
        part = Partition(attr, class_label, reference, self.schema.subgroup_count(attr), present, absent)
        self._partitions[key] = part
        return part

    def select(self, indices) -> ScoreTable:
        """New table holding the records at ``indices`` (in the given order)."""
        indices = np.asarray(indices, dtype=np.int64)
        return ScoreTable(
            self.schema, self.assignments[indices], self.scores[indices],
            self.positive[indices], [self.sample_ids[i] for i in indices],
            detector=self.detector, dataset=self.dataset, metadata=self.metadata,
        )

    def with_scores(self, scores, positive=None) -> ScoreTable:
        return ScoreTable(
            self.schema, self.assignments, scores,
            self.positive if positive is None else positive, self.sample_ids,
            detector=self.detector, dataset=self.dataset, metadata=self.metadata,
        )

    def rename(self, detector=None, dataset=None) -> ScoreTable:
        return ScoreTable(
            self.schema, self.assignments, self.scores, self.positive, self.sample_ids,
            detector=detector or self.detector, dataset=dataset or self.dataset,
            metadata=self.metadata,
        )


def bucket(table: ScoreTable, attr: AttributeRef, subgroup, x: int, class_label=POSITIVE,
           reference=None):
    """Scores of one side of one subgroup; empty array when nothing matches.

    ``subgroup`` is a key tuple (one label index per remaining group) or its
    integer code.
    """
    code = subgroup if isinstance(subgroup, (int, np.integer)) else table.schema.encode_subgroup(attr.group, subgroup)
    part = table.partition(attr, class_label, reference)
    idx = (part.present if x else part.absent).get(int(code))
    if idx is None:
        return np.empty(0)
    return table.scores[idx]


@dataclass(frozen=True)
class TprStep:
    """Empirical rate ``P(score >= t)`` as a left-continuous step function.

    ``thresholds`` are the sorted unique scores and ``rates[j]`` the
    fraction of scores at or above ``thresholds[j]``.
    """

    thresholds: np.ndarray
    rates: np.ndarray
    size: int
    sorted_scores: np.ndarray = field(repr=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        below = np.searchsorted(self.sorted_scores, t, side="left")
        out = (self.size - below) / self.size
        return float(out) if out.ndim == 0 else out

    def integral(self) -> float:
        """Exact integral over [0, 1]."""
        widths = np.diff(np.concatenate(([0.0], self.thresholds)))
        return math.fsum(widths * self.rates)


def tpr_step(scores) -> TprStep:
    s = np.sort(np.asarray(scores, dtype=float))
    if s.size == 0:
        raise EmptyBucketError("empty bucket: cannot estimate a rate from zero scores")
    thresholds, first = np.unique(s, return_index=True)
    rates = (s.size - first) / s.size
    return TprStep(thresholds, rates, int(s.size), s)


def mean_score(scores) -> float:
    """Arithmetic mean with correctly rounded summation."""
    s = np.asarray(scores, dtype=float)
    if s.size == 0:
        raise EmptyBucketError("empty bucket: mean of zero scores")
    return math.fsum(s.tolist()) / s.size


# -- CSV ------------------------------------------------------------------

def load_scores(source, schema: AttributeSchema, detector=None, dataset=None) -> ScoreTable:
    """Parse a score CSV (text or file object) against ``schema``."""
    fh = io.StringIO(source) if isinstance(source, str) else source
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ScoreFileError("empty score document", row=1) from None
    header = [h.strip() for h in header]
    col = {name: i for i, name in enumerate(header)}
    missing = [c for c in (*REQUIRED_COLUMNS, *(g.name for g in schema.groups)) if c not in col]
    if missing:
        raise ScoreFileError(f"missing column(s): {', '.join(missing)}", row=1)
    known = set(REQUIRED_COLUMNS) | {g.name for g in schema.groups}
    extra = [h for h in header if h not in known]
    if extra:
        warnings.warn(f"ignoring unknown column(s): {', '.join(extra)}", stacklevel=2)

    lookups = [{lab: i for i, lab in enumerate(g.labels)} for g in schema.groups]
    group_cols = [col[g.name] for g in schema.groups]
    ids, scores, classes, rows = [], [], [], []
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise ScoreFileError(f"expected {len(header)} fields, got {len(row)}", row=rowno)
        raw = row[col["score"]].strip()
        try:
            score = float(raw)
        except ValueError:
            raise ScoreFileError(f"non-numeric score {raw!r}", row=rowno) from None
        if not math.isfinite(score) or not 0.0 <= score <= 1.0:
            raise ScoreFileError(f"score {raw} outside [0, 1]", row=rowno)
        cls = row[col["class"]].strip()
        if cls not in (POSITIVE, NEGATIVE):
            raise ScoreFileError(f"class {cls!r}: expected {POSITIVE!r} or {NEGATIVE!r}", row=rowno)
        assignment = []
        for g, ci, lookup in zip(schema.groups, group_cols, lookups):
            label = row[ci].strip()
            try:
                assignment.append(lookup[label])
            except KeyError:
                raise ScoreFileError(f"unknown label {label!r} for group {g.name!r}", row=rowno) from None
        ids.append(row[col["sample_id"]].strip())
        scores.append(score)
        classes.append(cls == POSITIVE)
        rows.append(assignment)

    if len(set(ids)) != len(ids):
        warnings.warn("duplicate sample_id values in score document", stacklevel=2)
    assignments = np.array(rows, dtype=np.int64).reshape(len(rows), schema.n_groups)
    try:
        return ScoreTable(schema, assignments, np.array(scores, dtype=float),
                          np.array(classes, dtype=bool), ids,
                          detector=detector or "detector", dataset=dataset or "dataset")
    except SchemaError as exc:  # pragma: no cover - rows were checked above
        raise ScoreFileError(str(exc)) from None


def read_scores(path, schema, detector=None, dataset=None) -> ScoreTable:
    with open(path, encoding="utf-8", newline="") as fh:
        return load_scores(fh, schema, detector=detector, dataset=dataset)


def write_scores(table: ScoreTable, fh) -> None:
    """Write ``table`` in the score CSV format."""
    schema = table.schema
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow([*REQUIRED_COLUMNS, *(g.name for g in schema.groups)])
    for sid, score, pos, assignment in zip(table.sample_ids, table.scores.tolist(),
                                           table.positive.tolist(), table.assignments.tolist()):
        writer.writerow([sid, repr(score), POSITIVE if pos else NEGATIVE,
                         *(g.labels[i] for g, i in zip(schema.groups, assignment))])

"""Attribute groups, label combinations and their mixed-radix indexing.

A schema is an ordered list of groups, each holding mutually exclusive
labels. A combination assigns one label to every group; combinations are
numbered in mixed radix with the first group as the most significant digit.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from functools import cached_property
from importlib import resources

from .exceptions import SchemaError

_NAME_RE = re.compile(r"^[a-z0-9_]{1,64}$")


@dataclass(frozen=True)
class Group:
    name: str
    labels: tuple[str, ...]

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class AttributeRef:
    """One label of one group: the attribute under analysis.

    A sample has the attribute ("present") when its label in ``group``
    equals ``label``; any other label of that group counts as absent.
    """

    group: int
    label: int

    def name(self, schema: AttributeSchema) -> str:
        return schema.qualified_name(self)


class AttributeSchema:
    """Immutable ordered collection of attribute groups."""

    def __init__(self, groups):
        groups = tuple(g if isinstance(g, Group) else Group(g[0], tuple(g[1])) for g in groups)
        if not groups:
            raise SchemaError("schema must contain at least one group")
        seen = set()
        for g in groups:
            if g.name in seen:
                raise SchemaError(f"duplicate group name {g.name!r}")
            seen.add(g.name)
            if not g.labels:
                raise SchemaError(f"group {g.name!r} has no labels")
            if len(set(g.labels)) != len(g.labels):
                dup = next(lab for lab in g.labels if g.labels.count(lab) > 1)
                raise SchemaError(f"duplicate label {dup!r} in group {g.name!r}")
        self._groups = groups
        self._group_index = {g.name: i for i, g in enumerate(groups)}

    @property
    def groups(self) -> tuple[Group, ...]:
        return self._groups

    @property
    def n_groups(self) -> int:
        return len(self._groups)

    @cached_property
    def radices(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self._groups)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        # stride of digit i = product of radices after i
        out = [1] * self.n_groups
        for i in range(self.n_groups - 2, -1, -1):
            out[i] = out[i + 1] * self.radices[i + 1]
        return tuple(out)

    @property
    def combination_count(self) -> int:
        return math.prod(self.radices)

    def __eq__(self, other):
        return isinstance(other, AttributeSchema) and self._groups == other._groups

    def __hash__(self):
        return hash(self._groups)

    def __repr__(self):
        return f"AttributeSchema({[ (g.name, len(g)) for g in self._groups ]})"

    def group_index(self, name: str) -> int:
        try:
            return self._group_index[name]
        except KeyError:
            raise SchemaError(f"unknown group {name!r}") from None

    def label_index(self, group: int, label: str) -> int:
        try:
            return self._groups[group].labels.index(label)
        except ValueError:
            raise SchemaError(
                f"unknown label {label!r} in group {self._groups[group].name!r}"
            ) from None

    # -- attributes -------------------------------------------------------

    def attributes(self):
        """Every label of every group, in schema order."""
        return [AttributeRef(gi, li) for gi, g in enumerate(self._groups) for li in range(len(g))]

    def qualified_name(self, attr: AttributeRef) -> str:
        self.check_attribute(attr)
        g = self._groups[attr.group]
        return f"{g.name}.{g.labels[attr.label]}"

    def check_attribute(self, attr: AttributeRef) -> None:
        if not 0 <= attr.group < self.n_groups:
            raise SchemaError(f"group index {attr.group} out of range")
        if not 0 <= attr.label < self.radices[attr.group]:
            raise SchemaError(
                f"label index {attr.label} out of range for group "
                f"{self._groups[attr.group].name!r}"
            )

    def ref(self, name: str) -> AttributeRef:
        """Resolve ``"group.label"`` or a bare label that is unique across groups."""
        if "." in name:
            gname, lname = name.split(".", 1)
            gi = self.group_index(gname)
            return AttributeRef(gi, self.label_index(gi, lname))
        hits = [
            AttributeRef(gi, g.labels.index(name))
            for gi, g in enumerate(self._groups)
            if name in g.labels
        ]
        if not hits:
            raise SchemaError(f"unknown attribute {name!r}")
        if len(hits) > 1:
            raise SchemaError(f"attribute {name!r} is ambiguous; qualify it as group.label")
        return hits[0]

    # -- mixed radix ------------------------------------------------------

    def encode(self, combination) -> int:
        combination = tuple(combination)
        if len(combination) != self.n_groups:
            raise SchemaError(
                f"assignment has {len(combination)} entries, schema has {self.n_groups} groups"
            )
        index = 0
        for digit, radix in zip(combination, self.radices):
            if not 0 <= digit < radix:
                raise SchemaError(f"label index {digit} out of range (radix {radix})")
            index = index * radix + digit
        return index

    def decode(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.combination_count:
            raise SchemaError(
                f"combination index {index} out of range [0, {self.combination_count})"
            )
        digits = []
        for radix in reversed(self.radices):
            index, d = divmod(index, radix)
            digits.append(d)
        return tuple(reversed(digits))

    def combinations(self):
        """All combinations in index order."""
        return itertools.product(*(range(r) for r in self.radices))

    # -- subgroups --------------------------------------------------------

    def subgroup_radices(self, group: int) -> tuple[int, ...]:
        return self.radices[:group] + self.radices[group + 1:]

    def subgroup_count(self, attr: AttributeRef) -> int:
        self.check_attribute(attr)
        return self.combination_count // self.radices[attr.group]

    def subgroups_of(self, attr: AttributeRef) -> list[tuple[int, ...]]:
        """Keys over the groups other than ``attr``'s, in mixed-radix order."""
        self.check_attribute(attr)
        return list(itertools.product(*(range(r) for r in self.subgroup_radices(attr.group))))

    def encode_subgroup(self, group: int, key) -> int:
        index = 0
        for digit, radix in zip(key, self.subgroup_radices(group)):
            index = index * radix + digit
        return index

    def decode_subgroup(self, group: int, index: int) -> tuple[int, ...]:
        digits = []
        for radix in reversed(self.subgroup_radices(group)):
            index, d = divmod(index, radix)
            digits.append(d)
        return tuple(reversed(digits))

    # -- serialization ----------------------------------------------------

    def to_dict(self):
        return {"groups": [{"name": g.name, "labels": list(g.labels)} for g in self._groups]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _line_of(text: str, token: str, occurrence: int = 1) -> int | None:
    pos = -1
    for _ in range(occurrence):
        pos = text.find(token, pos + 1)
        if pos < 0:
            return None
    return text.count("\n", 0, pos) + 1


def _where(text, name, occurrence=1):
    line = _line_of(text, json.dumps(name), occurrence)
    return f" (line {line})" if line else ""


def load_schema(source: str) -> AttributeSchema:
    """Parse a schema document (JSON text) into a validated schema."""
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed schema document: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("groups"), list):
        raise SchemaError('schema document must be an object with a "groups" list')

    groups = []
    name_seen: dict[str, int] = {}
    label_seen: dict[str, int] = {}
    for pos, entry in enumerate(doc["groups"]):
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise SchemaError(f'group #{pos} must be an object with a string "name"')
        name = entry["name"]
        labels = entry.get("labels")
        name_seen[name] = name_seen.get(name, 0) + 1
        if not _NAME_RE.match(name):
            raise SchemaError(f"invalid group name {name!r}{_where(source, name)}: expected [a-z0-9_]+, at most 64 chars")
        if name_seen[name] > 1:
            raise SchemaError(f"duplicate group name {name!r}{_where(source, name, name_seen[name])}")
        if not isinstance(labels, list) or not all(isinstance(lab, str) for lab in labels):
            raise SchemaError(f'group {name!r}{_where(source, name)} must have a "labels" list of strings')
        if not labels:
            raise SchemaError(f"empty group {name!r}{_where(source, name)}")
        local = set()
        for lab in labels:
            label_seen[lab] = label_seen.get(lab, 0) + 1
            if not _NAME_RE.match(lab):
                raise SchemaError(f"invalid label name {lab!r} in group {name!r}{_where(source, lab, label_seen[lab])}")
            if lab in local:
                raise SchemaError(f"duplicate label {lab!r} in group {name!r}{_where(source, lab, label_seen[lab])}")
            local.add(lab)
        groups.append(Group(name, tuple(labels)))
    return AttributeSchema(groups)


def read_schema(path) -> AttributeSchema:
    with open(path, encoding="utf-8") as fh:
        return load_schema(fh.read())


def face_attribute_schema() -> AttributeSchema:
    """The eleven facial-attribute groups of the bundled example (46656 combinations)."""
    text = resources.files("biasaudit.data").joinpath("face_attributes.json").read_text("utf-8")
    return load_schema(text)


# Default reporting subset for the face schema: one label per binary group
# plus every label of the multi-label groups except mustache_and_beard.
REPORTED_FACE_ATTRIBUTES = (
    "attractive", "man", "child", "young", "old",
    "black_hair", "blonde_hair", "brown_hair", "gray_hair",
    "straight_hair", "wavy_hair", "bald", "white_skin",
    "black_eyes", "blue_eyes", "green_eyes", "big_nose",
    "oval_face", "round_face", "square_face",
    "mustache", "beard", "no_makeup", "makeup", "heavy_makeup",
)

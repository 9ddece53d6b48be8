"""Attribute-conditioned score generator with known ground-truth bias.

Each combination of labels draws scores from a normal distribution whose
mean is the base mean plus the additive shifts of its labels, clamped to
[0, 1].  Because the model is closed-form, the expected brisk of every
attribute is available analytically.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .schema import AttributeRef, AttributeSchema
from .scores import ScoreTable
from .validation import check_fraction

PRNG = "numpy.random.PCG64"


@dataclass(frozen=True)
class Effect:
    group: str
    label: str
    beta: float = 0.0
    std: float | None = None


@dataclass(frozen=True)
class SimSpec:
    schema: AttributeSchema = field(repr=False)
    base_mean: float = 0.7
    base_std: float = 0.05
    k: int = 4
    seed: int = 0
    effects: tuple = ()

    def __post_init__(self):
        if not 0.0 < self.base_mean < 1.0:
            raise ValidationError(f"base_mean must lie in (0, 1), got {self.base_mean}")
        if not self.base_std > 0:
            raise ValidationError(f"base_std must be positive, got {self.base_std}")
        if isinstance(self.k, bool) or not isinstance(self.k, numbers.Integral) or self.k < 1:
            raise ValidationError(f"k must be a positive integer, got {self.k!r}")
        if not isinstance(self.seed, numbers.Integral) or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        effects = tuple(e if isinstance(e, Effect) else Effect(**e) for e in self.effects)
        seen = set()
        for e in effects:
            try:
                gi = self.schema.group_index(e.group)
                self.schema.label_index(gi, e.label)
            except ValidationError as exc:
                raise ValidationError(f"invalid effect reference {e.group}.{e.label}: {exc}") from None
            if (e.group, e.label) in seen:
                raise ValidationError(f"duplicate effect for {e.group}.{e.label}")
            seen.add((e.group, e.label))
            if not math.isfinite(e.beta):
                raise ValidationError(f"effect {e.group}.{e.label} has non-finite beta")
            if e.std is not None and not e.std > 0:
                raise ValidationError(f"effect {e.group}.{e.label} std must be positive")
        object.__setattr__(self, "effects", effects)

    def combination_params(self):
        """Mean and std of the unclamped normal for every combination, in index order."""
        schema = self.schema
        codes = np.arange(schema.combination_count)
        digits = np.stack(np.unravel_index(codes, schema.radices), axis=1) if schema.n_groups else codes[:, None]
        mean = np.full(codes.size, float(self.base_mean))
        std = np.full(codes.size, float(self.base_std))
        for e in self.effects:
            gi = schema.group_index(e.group)
            hit = digits[:, gi] == schema.label_index(gi, e.label)
            mean[hit] += e.beta
            if e.std is not None:
                std[hit] = e.std
        return digits, mean, std


def load_sim_spec(source: str, schema: AttributeSchema) -> SimSpec:
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed simulation spec: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise ValidationError("simulation spec must be a JSON object")
    unknown = set(doc) - {"base_mean", "base_std", "k", "seed", "effects"}
    if unknown:
        raise ValidationError(f"unknown simulation spec field(s): {', '.join(sorted(unknown))}")
    effects = doc.get("effects", [])
    if not isinstance(effects, list) or not all(isinstance(e, dict) for e in effects):
        raise ValidationError('"effects" must be a list of objects')
    try:
        effects = tuple(Effect(**e) for e in effects)
    except TypeError as exc:
        raise ValidationError(f"bad effect entry: {exc}") from None
    kwargs = {k: doc[k] for k in ("base_mean", "base_std", "k", "seed") if k in doc}
    return SimSpec(schema, effects=effects, **kwargs)


def simulate(spec: SimSpec, detector="simulated", dataset="simulated") -> ScoreTable:
    """Draw ``k`` positive-class scores for every label combination."""
    digits, mean, std = spec.combination_params()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    z = rng.standard_normal((mean.size, spec.k))
    scores = np.clip(mean[:, None] + std[:, None] * z, 0.0, 1.0).ravel()
    assignments = np.repeat(digits, spec.k, axis=0)
    ids = [f"c{c}_r{r}" for c in range(mean.size) for r in range(spec.k)]
    return ScoreTable(spec.schema, assignments, scores, None, ids, detector=detector,
                      dataset=dataset, metadata={"prng": PRNG, "seed": int(spec.seed)})


def _norm_pdf(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _norm_cdf(z):
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def clipped_normal_mean(mu, sigma, lower=0.0, upper=1.0):
    """Mean of ``clamp(X, lower, upper)`` for ``X ~ Normal(mu, sigma)``."""
    a = (lower - mu) / sigma
    b = (upper - mu) / sigma
    return (mu + sigma * (_norm_pdf(a) - _norm_pdf(b))
            + (lower - mu) * _norm_cdf(a) + (upper - mu) * (1.0 - _norm_cdf(b)))


def analytic_brisk(spec: SimSpec, attr: AttributeRef, reference=None) -> float:
    """Expected brisk of ``attr`` under ``spec`` (balanced design, any k)."""
    schema = spec.schema
    schema.check_attribute(attr)
    _, mean, std = spec.combination_params()
    clipped = np.array([clipped_normal_mean(m, s) for m, s in zip(mean, std)])
    grid = np.moveaxis(clipped.reshape(schema.radices), attr.group, -1)
    present = grid[..., attr.label]
    if reference is None:
        others = [i for i in range(schema.radices[attr.group]) if i != attr.label]
        if not others:
            raise ValidationError("attribute group has a single label; nothing to compare against")
        absent = grid[..., others].mean(axis=-1)
    else:
        absent = grid[..., reference]
    return math.fsum((present - absent).ravel().tolist()) / present.size


def subsample(table: ScoreTable, fraction, seed) -> ScoreTable:
    """Uniform sample without replacement of ``ceil(fraction * N)`` records."""
    fraction = check_fraction(fraction)
    if fraction == 1.0:
        return table
    n = len(table)
    size = min(n, math.ceil(fraction * n - 1e-9))
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=size, replace=False))
    return table.select(idx)

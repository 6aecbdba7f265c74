"""Composite index construction: min-max normalization, entropy weights,
and weighted-sum / TOPSIS aggregation over an indicator system."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError, ValidationError

# Zero-avoidance offset: after min-max scaling, values are shifted by EPS and
# rescaled by 1/(1+EPS) so no entry is exactly 0 (downstream log transforms).
EPS = 1e-4

_DIRECTIONS = {"+": "positive", "positive": "positive", "-": "negative", "negative": "negative"}


@dataclass(frozen=True)
class Indicator:
    name: str
    direction: str  # "positive" or "negative"
    variable: str
    group: str = ""


@dataclass(frozen=True)
class IndicatorSystem:
    """Flat list of indicators, each bound to one panel variable."""

    indicators: tuple

    def __post_init__(self):
        if not self.indicators:
            raise SchemaError("indicator system is empty")
        bound = [ind.variable for ind in self.indicators]
        if len(set(bound)) != len(bound):
            dupes = sorted({v for v in bound if bound.count(v) > 1})
            raise SchemaError(f"indicators bind the same variable more than once: {dupes}")
        for ind in self.indicators:
            if ind.direction not in ("positive", "negative"):
                raise SchemaError(f"indicator {ind.name!r}: bad direction {ind.direction!r}")

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        if not isinstance(raw, list):
            raise SchemaError(f"{path}: expected a JSON array of indicators")
        indicators = []
        for item in raw:
            try:
                direction = _DIRECTIONS[item["direction"]]
                indicators.append(
                    Indicator(
                        name=item["name"],
                        direction=direction,
                        variable=item["variable"],
                        group=item.get("group", ""),
                    )
                )
            except KeyError as exc:
                raise SchemaError(f"{path}: bad indicator entry {item!r}: {exc}") from None
        return cls(tuple(indicators))

    @property
    def names(self):
        return [ind.name for ind in self.indicators]

    @property
    def variables(self):
        return [ind.variable for ind in self.indicators]


@dataclass(frozen=True)
class IndexResult:
    entities: tuple
    years: tuple
    scores: np.ndarray = field(repr=False)  # (n_obs,), entity-major
    weights: np.ndarray = field(repr=False)
    normalized: np.ndarray = field(repr=False)
    indicator_names: tuple = ()
    method: str = "topsis"

    def rows(self):
        """Yield (entity, year, score) in entity-major order."""
        n_years = len(self.years)
        for i, entity in enumerate(self.entities):
            for t, year in enumerate(self.years):
                yield entity, year, float(self.scores[i * n_years + t])


def normalize_minmax(column, direction, name="column"):
    """Min-max scale one indicator column into (0, 1].

    Positive direction maps the max to 1, negative maps the min to 1. The
    zero-avoidance offset keeps every output strictly positive.
    """
    x = np.asarray(column, dtype=float)
    if x.size < 2:
        raise ValidationError(f"{name}: need at least 2 observations")
    lo, hi = x.min(), x.max()
    if hi <= lo:
        raise ValidationError(f"degenerate column {name!r}: max equals min")
    if direction == "positive" or direction == "+":
        base = (x - lo) / (hi - lo)
    elif direction == "negative" or direction == "-":
        base = (hi - x) / (hi - lo)
    else:
        raise SchemaError(f"bad direction {direction!r}")
    return (base + EPS) / (1.0 + EPS)


def entropy_weights(normalized):
    """Entropy weights over a strictly positive normalized matrix.

    p_ij = x_ij / sum_i x_ij; e_j = -(1/ln n) sum_i p_ij ln p_ij;
    w_j = (1 - e_j) / sum_j (1 - e_j).
    """
    x = np.asarray(normalized, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if n < 2:
        raise ValidationError("entropy weights need at least 2 observations")
    if np.any(x <= 0):
        raise ValidationError("entropy weights require strictly positive entries")
    p = x / x.sum(axis=0, keepdims=True)
    e = -(p * np.log(p)).sum(axis=0) / np.log(n)
    d = 1.0 - e
    total = d.sum()
    if total <= 0:
        raise ValidationError("all columns are uniform; entropy weights undefined")
    return d / total


def composite_index(normalized, weights, method="topsis"):
    """Aggregate a normalized matrix into per-observation scores in [0, 1]."""
    x = np.asarray(normalized, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    w = np.asarray(weights, dtype=float)
    if w.shape != (x.shape[1],):
        raise ValidationError(
            f"weights shape {w.shape} does not match {x.shape[1]} indicators"
        )
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError("weights must sum to 1")
    if method == "weighted-sum":
        return x @ w
    if method == "topsis":
        v = x * w
        ideal = v.max(axis=0)
        anti = v.min(axis=0)
        d_pos = np.sqrt(((v - ideal) ** 2).sum(axis=1))
        d_neg = np.sqrt(((v - anti) ** 2).sum(axis=1))
        denom = d_pos + d_neg
        # all rows identical: distance to both poles is 0, call it mid-scale
        return np.where(denom > 0, d_neg / np.where(denom > 0, denom, 1.0), 0.5)
    raise SchemaError(f"unknown aggregation method {method!r}")


def build_index(panel, system, method="topsis", per_year=False):
    """Run the full pipeline on a panel: normalize each bound variable,
    compute entropy weights, and aggregate.

    Normalization pools all entities and years per indicator by default;
    per_year=True rescales within each year instead.
    """
    raw = panel.matrix(system.variables)
    norm = np.empty_like(raw)
    if per_year:
        t_idx = panel.time_index()
        for j, ind in enumerate(system.indicators):
            for t in range(panel.n_years):
                mask = t_idx == t
                norm[mask, j] = normalize_minmax(raw[mask, j], ind.direction, ind.name)
    else:
        for j, ind in enumerate(system.indicators):
            norm[:, j] = normalize_minmax(raw[:, j], ind.direction, ind.name)
    weights = entropy_weights(norm)
    scores = composite_index(norm, weights, method=method)
    return IndexResult(
        entities=panel.entities,
        years=panel.years,
        scores=scores,
        weights=weights,
        normalized=norm,
        indicator_names=tuple(system.names),
        method=method,
    )

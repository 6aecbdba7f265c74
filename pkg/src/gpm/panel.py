"""Balanced panel datasets and spatial weight matrices.

A panel is stored long-format on disk (one row per entity-year, one column
per variable) and as a dense (entity, year, variable) array in memory.
Loading is strict: the grid must be complete, every cell numeric and finite.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError, ValidationError

EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class PanelDataset:
    """Balanced entity x year x variable panel.

    data has shape (n_entities, n_years, n_variables); years are strictly
    increasing and every cell is finite.
    """

    entities: tuple
    years: tuple
    variables: tuple
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        n, t, k = len(self.entities), len(self.years), len(self.variables)
        if self.data.shape != (n, t, k):
            raise ValidationError(
                f"data shape {self.data.shape} does not match "
                f"({n} entities, {t} years, {k} variables)"
            )
        if any(b <= a for a, b in zip(self.years, self.years[1:])):
            raise ValidationError("years must be strictly increasing")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError("panel contains NaN or infinite values")

    @property
    def n_entities(self):
        return len(self.entities)

    @property
    def n_years(self):
        return len(self.years)

    @property
    def n_obs(self):
        return self.n_entities * self.n_years

    def var_index(self, name):
        try:
            return self.variables.index(name)
        except ValueError:
            raise SchemaError(f"unknown variable {name!r}") from None

    def column(self, name):
        """Values of one variable, flattened entity-major (entity, then year)."""
        return self.data[:, :, self.var_index(name)].ravel().copy()

    def matrix(self, names):
        """Stacked columns, shape (n_obs, len(names)), entity-major rows."""
        cols = [self.var_index(n) for n in names]
        return self.data[:, :, cols].reshape(self.n_obs, len(cols)).copy()

    def value(self, entity, year, variable):
        i = self.entities.index(entity)
        t = self.years.index(year)
        return float(self.data[i, t, self.var_index(variable)])

    def entity_index(self):
        """Entity group label per observation, aligned with column()."""
        return np.repeat(np.arange(self.n_entities), self.n_years)

    def time_index(self):
        return np.tile(np.arange(self.n_years), self.n_entities)

    def filter_years(self, first=None, last=None):
        lo = self.years[0] if first is None else first
        hi = self.years[-1] if last is None else last
        keep = [t for t, y in enumerate(self.years) if lo <= y <= hi]
        if not keep:
            raise ValidationError(f"no years in range [{lo}, {hi}]")
        return PanelDataset(
            self.entities,
            tuple(self.years[t] for t in keep),
            self.variables,
            self.data[:, keep, :].copy(),
        )


def load_panel_csv(path, schema=None):
    """Load and validate a balanced panel from a long-format CSV.

    The header must start with ``entity,year``; remaining columns are
    variables. ``schema``, when given, lists variable names that must be
    present (extra columns are kept).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if len(header) < 3 or header[0] != "entity" or header[1] != "year":
            raise SchemaError(
                f"{path}: header must start with 'entity,year' followed by "
                f"variable columns, got {header[:3]}"
            )
        variables = tuple(header[2:])
        if schema is not None:
            for name in schema:
                if name not in variables:
                    raise SchemaError(f"{path}: missing column {name!r}")
        cells = {}
        entities = []
        seen_entities = set()
        years = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            entity = row[0]
            try:
                year = int(row[1])
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: non-integer year {row[1]!r}") from None
            if (entity, year) in cells:
                raise ValidationError(f"{path}:{lineno}: duplicate cell ({entity}, {year})")
            values = []
            for name, text in zip(variables, row[2:]):
                try:
                    v = float(text)
                except ValueError:
                    raise SchemaError(
                        f"{path}:{lineno}: non-numeric value {text!r} in column {name!r}"
                    ) from None
                if not math.isfinite(v):
                    raise ValidationError(
                        f"{path}:{lineno}: non-finite value in column {name!r}"
                    )
                values.append(v)
            if entity not in seen_entities:
                seen_entities.add(entity)
                entities.append(entity)
            years.add(year)
            cells[(entity, year)] = values

    if not cells:
        raise ValidationError(f"{path}: no data rows")
    years = tuple(sorted(years))
    missing = [(e, y) for e in entities for y in years if (e, y) not in cells]
    if missing:
        shown = ", ".join(f"({e}, {y})" for e, y in missing[:5])
        more = "" if len(missing) <= 5 else f" and {len(missing) - 5} more"
        raise ValidationError(f"{path}: unbalanced panel, missing cell(s): {shown}{more}")
    data = np.array(
        [[cells[(e, y)] for y in years] for e in entities], dtype=float
    )
    return PanelDataset(tuple(entities), years, variables, data)


def write_panel_csv(panel, path):
    """Write a panel back to long-format CSV.

    Floats use %.17g so a load/write round trip is bit exact.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entity", "year"] + list(panel.variables))
        for i, entity in enumerate(panel.entities):
            for t, year in enumerate(panel.years):
                writer.writerow(
                    [entity, year] + ["%.17g" % v for v in panel.data[i, t, :]]
                )


@dataclass(frozen=True)
class SpatialWeights:
    """Spatial weight matrix over the panel's entities."""

    matrix: np.ndarray = field(repr=False)
    row_standardized: bool = False

    def __post_init__(self):
        w = self.matrix
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValidationError("weight matrix must be square")
        if np.any(np.diag(w) != 0.0):
            raise ValidationError("weight matrix must have a zero diagonal")
        if np.any(w < 0.0):
            raise ValidationError("weight matrix entries must be nonnegative")
        if self.row_standardized:
            sums = w.sum(axis=1)
            bad = (sums > 0) & (np.abs(sums - 1.0) > 1e-12)
            if np.any(bad):
                raise ValidationError("row-standardized weights: nonzero rows must sum to 1")
        else:
            if not np.allclose(w, w.T, rtol=0.0, atol=1e-12):
                raise ValidationError("raw weight matrix must be symmetric")

    @property
    def n(self):
        return self.matrix.shape[0]


def haversine_km(a, b):
    """Great-circle distance in km between (lat, lon) pairs in degrees."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def build_inverse_distance_weights(coords, row_standardize=True):
    """Inverse great-circle-distance weights: w_ij = 1 / d_ij (km), zero diagonal.

    coords is a sequence of (lat, lon) in degrees, one per entity.
    """
    n = len(coords)
    if n < 2:
        raise ValidationError("need at least 2 entities to build spatial weights")
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = haversine_km(coords[i], coords[j])
            if d < 1e-9:
                raise ValidationError(
                    f"entities {i} and {j} share coordinates; inverse distance is infinite"
                )
            w[i, j] = w[j, i] = 1.0 / d
    if row_standardize:
        sums = w.sum(axis=1, keepdims=True)
        w = np.where(sums > 0, w / sums, w)
        return SpatialWeights(w, row_standardized=True)
    return SpatialWeights(w, row_standardized=False)


def load_coordinates_csv(path):
    """Read a coordinates file (header entity,lat,lon); returns (entities, coords)."""
    entities, coords = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["entity", "lat", "lon"]:
            raise SchemaError(f"{path}: header must be 'entity,lat,lon'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                entities.append(row[0])
                coords.append((float(row[1]), float(row[2])))
            except (IndexError, ValueError):
                raise SchemaError(f"{path}:{lineno}: bad coordinate row {row!r}") from None
    if len(entities) < 2:
        raise ValidationError(f"{path}: need at least 2 entities")
    return entities, coords

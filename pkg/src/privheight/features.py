"""Ratio-of-measurement features and the observable/privileged split.

Raw anthropometric values are hard to estimate accurately from images,
so all regressors operate on ratios of measurements instead.  For a
group of n measurements every unordered pair (i, j) with i < j (in
schema order) contributes one ratio m_i / m_j; the lower-index
measurement is always the numerator.  Observable ratios mix observable
measurements only, privileged ratios mix privileged ones only, and the
height target never appears in either group.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np


class FeatureError(ValueError):
    pass


class RecordDiscardError(FeatureError):
    """A record failed validation and must be dropped; names the field."""

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{reason} in {field_name}")
        self.field_name = field_name
        self.reason = reason


@dataclass(frozen=True)
class MeasurementSchema:
    names: tuple[str, ...]
    observable_indices: tuple[int, ...]
    privileged_indices: tuple[int, ...]
    height_index: int

    def __post_init__(self) -> None:
        n = len(self.names)
        if len(set(self.names)) != n:
            raise FeatureError("measurement names must be unique")
        all_idx = set(self.observable_indices) | set(self.privileged_indices)
        if not all(0 <= i < n for i in all_idx | {self.height_index}):
            raise FeatureError("schema index out of range")
        if set(self.observable_indices) & set(self.privileged_indices):
            raise FeatureError("observable and privileged index sets overlap")
        if self.height_index in all_idx:
            raise FeatureError("height index may not appear in a feature group")

    @property
    def n_observable_ratios(self) -> int:
        k = len(self.observable_indices)
        return k * (k - 1) // 2

    @property
    def n_privileged_ratios(self) -> int:
        k = len(self.privileged_indices)
        return k * (k - 1) // 2

    @property
    def observable_names(self) -> tuple[str, ...]:
        return tuple(self.names[i] for i in self.observable_indices)

    @property
    def privileged_names(self) -> tuple[str, ...]:
        return tuple(self.names[i] for i in self.privileged_indices)

    @property
    def height_name(self) -> str:
        return self.names[self.height_index]


@dataclass
class FeatureSplit:
    x: np.ndarray                 # observable ratios
    x_star: np.ndarray            # privileged ratios
    pair_map_observable: tuple[tuple[int, int], ...]   # measurement-index pairs
    pair_map_privileged: tuple[tuple[int, int], ...]


def ratio_pairs(indices) -> tuple[tuple[int, int], ...]:
    """Lexicographic (i, j) pairs of measurement indices, i < j in schema order."""
    return tuple(combinations(indices, 2))


def compute_ratios(measurements) -> np.ndarray:
    """All pairwise ratios m_i / m_j for i < j, in lexicographic pair order."""
    m = np.asarray(measurements, dtype=float).ravel()
    for i, v in enumerate(m):
        if not np.isfinite(v):
            raise FeatureError(f"non-finite measurement at index {i}")
        if v <= 0:
            raise FeatureError(f"non-positive measurement at index {i}")
    if m.size < 2:
        return np.zeros(0)
    i_idx, j_idx = np.triu_indices(m.size, k=1)
    return m[i_idx] / m[j_idx]


def _validate_group(record, schema, indices):
    values = []
    for i in indices:
        name = schema.names[i]
        v = record.measurements[i]
        if v is None or not np.isfinite(v):
            raise RecordDiscardError(name, "missing value")
        if v <= 0:
            raise RecordDiscardError(name, "non-positive value")
        values.append(float(v))
    return np.array(values)


def split_features(record, schema: MeasurementSchema) -> FeatureSplit:
    """Observable and privileged ratio vectors for one record.

    Raises RecordDiscardError naming the offending measurement when the
    record has missing or invalid values.
    """
    if len(record.measurements) != len(schema.names):
        raise FeatureError(
            f"record has {len(record.measurements)} measurements, "
            f"schema expects {len(schema.names)}"
        )
    obs = _validate_group(record, schema, schema.observable_indices)
    priv = _validate_group(record, schema, schema.privileged_indices)
    return FeatureSplit(
        x=compute_ratios(obs),
        x_star=compute_ratios(priv),
        pair_map_observable=ratio_pairs(schema.observable_indices),
        pair_map_privileged=ratio_pairs(schema.privileged_indices),
    )


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray            # 1.0 where the training column was constant

    def apply(self, features) -> np.ndarray:
        f = np.asarray(features, dtype=float)
        if f.shape[-1] != self.mean.size:
            raise FeatureError(
                f"feature dim {f.shape[-1]} != standardizer dim {self.mean.size}"
            )
        return (f - self.mean) / self.scale

    def invert(self, standardized) -> np.ndarray:
        z = np.asarray(standardized, dtype=float)
        return z * self.scale + self.mean


def standardize_fit(train_features) -> Standardizer:
    """Per-dimension z-scoring; constant columns are centered but not scaled."""
    X = np.atleast_2d(np.asarray(train_features, dtype=float))
    if X.shape[0] < 2:
        raise FeatureError("need at least 2 vectors to fit a standardizer")
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    scale = np.where(sd < 1e-12, 1.0, sd)
    return Standardizer(mean=mean, scale=scale)


def standardize_apply(s: Standardizer, features) -> np.ndarray:
    return s.apply(features)


def schema_to_dict(schema: MeasurementSchema) -> dict:
    return {
        "names": list(schema.names),
        "observable": [schema.names[i] for i in schema.observable_indices],
        "privileged": [schema.names[i] for i in schema.privileged_indices],
        "height": schema.names[schema.height_index],
    }


def schema_from_dict(d: dict) -> MeasurementSchema:
    try:
        names = list(d["names"])
        observable = list(d["observable"])
        privileged = list(d["privileged"])
        height = d["height"]
    except KeyError as exc:
        raise FeatureError(f"schema file missing field {exc}") from exc
    index = {name: i for i, name in enumerate(names)}
    for name in observable + privileged + [height]:
        if name not in index:
            raise FeatureError(f"schema references unknown measurement {name!r}")
    return MeasurementSchema(
        names=tuple(names),
        observable_indices=tuple(index[n] for n in observable),
        privileged_indices=tuple(index[n] for n in privileged),
        height_index=index[height],
    )


def load_schema(path) -> MeasurementSchema:
    with open(path, encoding="utf-8") as fh:
        return schema_from_dict(json.load(fh))


def save_schema(schema: MeasurementSchema, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(schema_to_dict(schema), fh, indent=2)
        fh.write("\n")

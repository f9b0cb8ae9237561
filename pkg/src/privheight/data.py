"""Dataset ingestion and a synthetic correlated-anthropometry generator.

The expected tabular layout is one CSV row per subject: subject_id,
gender, every measurement named by the schema (millimeters, stature
included), and weight (kg).  Rows with missing or non-positive required
values are discarded and logged, never imputed.

The synthetic generator substitutes for restricted anthropometric
databases.  Each subject draws a latent stature from a per-gender
normal distribution; every measurement is an affine function of stature
plus independent Gaussian noise:

    m = slope * stature + intercept + noise

The intercepts matter: a ratio of two measurements is informative about
stature exactly when the two intercept/slope offsets differ, so the
default profile gives head and girth measurements (privileged) large
offsets and low noise, and skeleton lengths (observable) small offsets
and mild noise.  That reproduces the intended regime: observable ratios
carry partial height information, privileged ratios carry more.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureError, MeasurementSchema


class DataError(ValueError):
    pass


@dataclass
class MeasurementRecord:
    subject_id: str
    gender: str                      # "Male" or "Female"
    measurements: np.ndarray         # mm, ordered per MeasurementSchema.names
    height: float                    # mm
    weight: float | None = None     # kg

    def __post_init__(self) -> None:
        if self.gender not in ("Male", "Female"):
            raise DataError(f"gender must be Male or Female, got {self.gender!r}")


# measurement generator profile: name -> (slope, intercept_mm, noise_sd_mm)
# fitted by eye to adult-body proportions; offsets (intercept/slope) drive
# how much height signal each ratio carries
OBSERVABLE_PROFILE = {
    "acromial_height": (0.81, 15.0, 6.0),
    "shoulder_elbow_length": (0.19, -12.0, 4.0),
    "elbow_wrist_length": (0.155, 8.0, 4.0),
    "arm_length": (0.345, -5.0, 5.0),
    "thigh_length": (0.26, -18.0, 5.0),
    "knee_height": (0.30, -9.0, 4.0),
    "tibial_height": (0.255, -11.0, 4.0),
    "biacromial_breadth": (0.21, 30.0, 7.0),
    "hip_breadth": (0.16, 75.0, 8.0),
    "foot_length": (0.14, 17.0, 3.5),
    "spine_length": (0.29, -25.0, 6.0),
}

PRIVILEGED_PROFILE = {
    "chest_circumference": (0.32, 450.0, 12.0),
    "waist_circumference": (0.25, 420.0, 14.0),
    "hip_circumference": (0.30, 440.0, 12.0),
    "thigh_circumference": (0.22, 180.0, 9.0),
    "knee_circumference": (0.15, 110.0, 6.0),
    "calf_circumference": (0.13, 140.0, 6.0),
    "ankle_circumference": (0.07, 95.0, 4.0),
    "upper_arm_circumference": (0.11, 105.0, 6.0),
    "forearm_circumference": (0.09, 110.0, 5.0),
    "wrist_circumference": (0.05, 80.0, 2.5),
    "neck_circumference": (0.10, 195.0, 5.0),
    "shoulder_circumference": (0.35, 500.0, 13.0),
    "head_circumference": (0.04, 500.0, 4.0),
    "head_breadth": (0.012, 130.0, 1.5),
    "head_length": (0.015, 170.0, 1.8),
    "face_length": (0.014, 95.0, 1.5),
    "bitragion_breadth": (0.010, 125.0, 1.5),
    "interpupillary_distance": (0.004, 56.0, 1.0),
    "hand_length": (0.105, 8.0, 2.0),
    "hand_breadth": (0.045, 10.0, 1.5),
    "foot_breadth": (0.05, 12.0, 2.0),
    "chest_depth": (0.09, 80.0, 7.0),
    "abdominal_depth": (0.08, 90.0, 9.0),
    "buttock_depth": (0.09, 75.0, 7.0),
    "vertical_trunk_circumference": (0.85, 180.0, 15.0),
    "sitting_height": (0.50, 25.0, 7.0),
}

HEIGHT_NAME = "height"

DEFAULT_PROFILE = {
    **OBSERVABLE_PROFILE,
    **PRIVILEGED_PROFILE,
    HEIGHT_NAME: (1.0, 0.0, 0.0),
}


def default_schema() -> MeasurementSchema:
    """11 observable and 26 privileged mm measurements plus the height target.

    Weight is the 27th privileged quantity but, not being a length, it
    takes no part in the ratio features; it rides along in its own CSV
    column.  26 ratio-forming privileged measurements give the expected
    26*25/2 = 325 privileged ratios (and 11*10/2 = 55 observable ones).
    """
    names = (
        list(OBSERVABLE_PROFILE) + list(PRIVILEGED_PROFILE) + [HEIGHT_NAME]
    )
    n_obs = len(OBSERVABLE_PROFILE)
    n_priv = len(PRIVILEGED_PROFILE)
    return MeasurementSchema(
        names=tuple(names),
        observable_indices=tuple(range(n_obs)),
        privileged_indices=tuple(range(n_obs, n_obs + n_priv)),
        height_index=n_obs + n_priv,
    )


@dataclass
class SyntheticConfig:
    n_subjects: int
    seed: int
    gender_mix: float = 0.5                # fraction male
    male_stature_mean: float = 1755.0      # mm
    male_stature_sd: float = 80.0
    female_stature_mean: float = 1625.0
    female_stature_sd: float = 70.0
    profile: dict = field(default_factory=lambda: dict(DEFAULT_PROFILE))
    weight_slope: float = 0.055            # kg per mm stature
    weight_intercept: float = -25.0
    weight_noise_sd: float = 7.0

    def validate(self) -> None:
        if self.n_subjects <= 0:
            raise DataError(f"n_subjects must be positive, got {self.n_subjects}")
        if not (0.0 <= self.gender_mix <= 1.0):
            raise DataError(f"gender_mix must be in [0, 1], got {self.gender_mix}")
        if self.male_stature_sd <= 0 or self.female_stature_sd <= 0:
            raise DataError("stature spreads must be positive")
        for name, (slope, _, noise) in self.profile.items():
            if noise < 0:
                raise DataError(f"negative noise level for {name}")


def generate_synthetic(config: SyntheticConfig, schema: MeasurementSchema | None = None):
    """Draw a synthetic population; deterministic for a fixed seed."""
    config.validate()
    schema = schema or default_schema()
    missing = [n for n in schema.names if n not in config.profile]
    if missing:
        raise DataError(f"profile lacks parameters for {missing}")

    rng = np.random.default_rng(config.seed)
    n = config.n_subjects
    n_male = int(round(n * config.gender_mix))
    genders = np.array(["Male"] * n_male + ["Female"] * (n - n_male))
    rng.shuffle(genders)

    is_male = genders == "Male"
    stature = np.where(
        is_male,
        config.male_stature_mean + config.male_stature_sd * rng.standard_normal(n),
        config.female_stature_mean + config.female_stature_sd * rng.standard_normal(n),
    )
    stature = np.clip(stature, 1000.0, 2400.0)

    columns = {}
    for name in schema.names:
        slope, intercept, noise = config.profile[name]
        vals = slope * stature + intercept + noise * rng.standard_normal(n)
        columns[name] = np.clip(vals, 1.0, None)
    columns[schema.height_name] = stature

    weight = (
        config.weight_slope * stature
        + config.weight_intercept
        + config.weight_noise_sd * rng.standard_normal(n)
    )
    weight = np.clip(weight, 20.0, None)

    records = []
    width = len(str(n))
    for i in range(n):
        m = np.array([columns[name][i] for name in schema.names])
        records.append(
            MeasurementRecord(
                subject_id=f"S{i + 1:0{width}d}",
                gender=str(genders[i]),
                measurements=m,
                height=float(stature[i]),
                weight=float(weight[i]),
            )
        )
    return records


def split_by_gender(records):
    """Order-preserving partition into {"Male": [...], "Female": [...]}."""
    out = {"Male": [], "Female": []}
    for r in records:
        out[r.gender].append(r)
    return out


_GENDER_ALIASES = {
    "male": "Male", "m": "Male", "female": "Female", "f": "Female",
}


def _parse_value(raw: str) -> float | None:
    raw = raw.strip()
    if not raw:
        return None
    try:
        v = float(raw)
    except ValueError:
        return None
    return v if np.isfinite(v) else None


def load_csv(path, schema: MeasurementSchema):
    """Read records; returns (records, discard_log).

    Each discard-log entry is {"row": 1-based data row, "subject_id": str,
    "reason": str}.  Required fields are the schema's observable,
    privileged and height measurements plus gender.
    """
    required_idx = sorted(
        set(schema.observable_indices)
        | set(schema.privileged_indices)
        | {schema.height_index}
    )
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        col = {name: i for i, name in enumerate(header)}
        needed = ["subject_id", "gender"] + [schema.names[i] for i in required_idx]
        absent = [name for name in needed if name not in col]
        if absent:
            raise DataError(f"{path}: header is missing columns {absent}")

        records, discard_log = [], []
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            subject_id = row[col["subject_id"]].strip()

            def _discard(reason):
                discard_log.append(
                    {"row": row_no, "subject_id": subject_id, "reason": reason}
                )

            gender = _GENDER_ALIASES.get(row[col["gender"]].strip().lower())
            if gender is None:
                _discard(f"invalid gender {row[col['gender']]!r}")
                continue

            values = np.full(len(schema.names), np.nan)
            bad = None
            for i, name in enumerate(schema.names):
                if name not in col:
                    continue
                v = _parse_value(row[col[name]])
                if v is not None:
                    values[i] = v
            for i in required_idx:
                name = schema.names[i]
                if np.isnan(values[i]):
                    bad = f"missing value in {name}"
                    break
                if values[i] <= 0:
                    bad = f"non-positive value in {name}"
                    break
            if bad:
                _discard(bad)
                continue

            weight = None
            if "weight" in col:
                weight = _parse_value(row[col["weight"]])
                if weight is not None and weight <= 0:
                    weight = None

            records.append(
                MeasurementRecord(
                    subject_id=subject_id,
                    gender=gender,
                    measurements=values,
                    height=float(values[schema.height_index]),
                    weight=weight,
                )
            )
    return records, discard_log


def write_csv(records, schema: MeasurementSchema, path) -> None:
    """Inverse of load_csv; floats are written with full round-trip precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "gender", *schema.names, "weight"])
        for r in records:
            if len(r.measurements) != len(schema.names):
                raise DataError(
                    f"record {r.subject_id} has {len(r.measurements)} measurements, "
                    f"schema expects {len(schema.names)}"
                )
            row = [r.subject_id, r.gender]
            row += [repr(float(v)) if np.isfinite(v) else "" for v in r.measurements]
            row.append("" if r.weight is None else repr(float(r.weight)))
            writer.writerow(row)

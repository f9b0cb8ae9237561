import numpy as np
import pytest

from privheight import data, features


def small_config(**kw):
    base = dict(n_subjects=40, seed=123)
    base.update(kw)
    return data.SyntheticConfig(**base)


def test_default_schema_counts():
    schema = data.default_schema()
    assert len(schema.observable_indices) == 11
    assert len(schema.privileged_indices) == 26
    assert schema.n_observable_ratios == 55
    assert schema.n_privileged_ratios == 325
    assert schema.height_name == "height"


def test_generator_is_deterministic():
    a = data.generate_synthetic(small_config())
    b = data.generate_synthetic(small_config())
    assert len(a) == len(b) == 40
    for ra, rb in zip(a, b):
        assert ra.subject_id == rb.subject_id
        assert ra.gender == rb.gender
        np.testing.assert_array_equal(ra.measurements, rb.measurements)
    c = data.generate_synthetic(small_config(seed=124))
    assert any(
        not np.array_equal(ra.measurements, rc.measurements) for ra, rc in zip(a, c)
    )


def test_generator_height_is_latent_stature():
    schema = data.default_schema()
    for r in data.generate_synthetic(small_config()):
        assert r.height == r.measurements[schema.height_index]
        assert r.height > 0
        assert np.all(r.measurements > 0)
        assert r.weight is not None and r.weight > 0


def test_gender_mix():
    recs = data.generate_synthetic(small_config(n_subjects=100, gender_mix=0.3))
    males = sum(r.gender == "Male" for r in recs)
    assert males == 30
    all_f = data.generate_synthetic(small_config(gender_mix=0.0))
    assert all(r.gender == "Female" for r in all_f)


def test_zero_noise_zero_intercept_collapses_ratios():
    profile = {name: (s, 0.0, 0.0) for name, (s, _, _) in data.DEFAULT_PROFILE.items()}
    recs = data.generate_synthetic(small_config(n_subjects=10, profile=profile))
    schema = data.default_schema()
    splits = [features.split_features(r, schema) for r in recs]
    X = np.array([sp.x for sp in splits])
    Xs = np.array([sp.x_star for sp in splits])
    assert np.ptp(X, axis=0).max() <= 1e-12
    assert np.ptp(Xs, axis=0).max() <= 1e-12


def test_strongest_privileged_ratio_beats_strongest_observable():
    # calibration target for the default generator profile
    schema = data.default_schema()
    recs = data.generate_synthetic(data.SyntheticConfig(n_subjects=500, seed=0))
    splits = [features.split_features(r, schema) for r in recs]
    X = np.array([sp.x for sp in splits])
    Xs = np.array([sp.x_star for sp in splits])
    h = np.array([r.height for r in recs])

    def best(M):
        cors = [abs(np.corrcoef(M[:, j], h)[0, 1]) for j in range(M.shape[1])]
        return max(cors)

    assert best(Xs) > best(X)


def test_invalid_config_rejected():
    with pytest.raises(data.DataError):
        data.generate_synthetic(small_config(n_subjects=0))
    with pytest.raises(data.DataError):
        data.generate_synthetic(small_config(gender_mix=1.5))
    with pytest.raises(data.DataError):
        data.generate_synthetic(small_config(male_stature_sd=-1.0))


def test_split_by_gender_partitions_in_order():
    recs = data.generate_synthetic(small_config(n_subjects=5, gender_mix=0.6))
    groups = data.split_by_gender(recs)
    assert len(groups["Male"]) == 3
    assert len(groups["Female"]) == 2
    merged = sorted(groups["Male"] + groups["Female"], key=lambda r: r.subject_id)
    assert [r.subject_id for r in merged] == [r.subject_id for r in recs]
    only_m = data.split_by_gender([r for r in recs if r.gender == "Male"])
    assert only_m["Female"] == []


def test_csv_round_trip_is_exact(tmp_path):
    schema = data.default_schema()
    recs = data.generate_synthetic(small_config(n_subjects=15))
    path = tmp_path / "d.csv"
    data.write_csv(recs, schema, path)
    loaded, log = data.load_csv(path, schema)
    assert log == []
    assert len(loaded) == len(recs)
    for a, b in zip(recs, loaded):
        assert a.subject_id == b.subject_id
        assert a.gender == b.gender
        np.testing.assert_array_equal(a.measurements, b.measurements)
        assert a.height == b.height
        assert a.weight == b.weight


def test_rows_with_problems_are_discarded_and_logged(tmp_path):
    schema = data.default_schema()
    recs = data.generate_synthetic(small_config(n_subjects=6))
    path = tmp_path / "d.csv"
    data.write_csv(recs, schema, path)
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    foot = header.index("foot_length")
    gender = header.index("gender")
    rows = [line.split(",") for line in lines[1:]]
    rows[1][foot] = ""                   # missing
    rows[2][foot] = "-4.0"               # non-positive
    rows[4][gender] = "unknown"          # bad gender
    path.write_text("\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n")

    loaded, log = data.load_csv(path, schema)
    assert len(loaded) == 3
    assert len(log) == 3
    assert len(loaded) + len(log) == len(recs)
    reasons = {entry["row"]: entry["reason"] for entry in log}
    assert reasons[2] == "missing value in foot_length"
    assert reasons[3] == "non-positive value in foot_length"
    assert "gender" in reasons[5]


def test_empty_file_with_header_loads_empty(tmp_path):
    schema = data.default_schema()
    path = tmp_path / "empty.csv"
    data.write_csv([], schema, path)
    loaded, log = data.load_csv(path, schema)
    assert loaded == []
    assert log == []


def test_malformed_header_rejected(tmp_path):
    schema = data.default_schema()
    path = tmp_path / "bad.csv"
    path.write_text("subject_id,gender,foo\nS1,Male,1.0\n")
    with pytest.raises(data.DataError, match="missing columns"):
        data.load_csv(path, schema)
    missing = tmp_path / "nope.csv"
    with pytest.raises(OSError):
        data.load_csv(missing, schema)

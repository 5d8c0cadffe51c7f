import numpy as np

from cdcycle.output import format_number, write_csv, write_json


def test_floats_round_trip_exactly(rng):
    values = np.concatenate(
        [
            rng.normal(size=64) * 10.0 ** rng.integers(-12, 12, size=64),
            [0.0, 1.0, -1.0, np.pi, 2.0 / 3.0],
        ]
    )
    for v in values:
        assert float(format_number(float(v))) == float(v)


def test_integers_and_bools():
    assert format_number(3) == "3"
    assert format_number(True) == "1"
    assert format_number(False) == "0"


def test_csv_writer(tmp_path):
    path = write_csv(tmp_path / "t.csv", ["a", "b"], [[1.0 / 3.0, "ok"], [2, "x"]])
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "a,b"
    assert float(lines[1].split(",")[0]) == 1.0 / 3.0


def test_json_writer_handles_numpy(tmp_path):
    payload = {"x": np.float64(0.1), "arr": np.arange(3), "n": np.int64(7)}
    path = write_json(tmp_path / "t.json", payload)
    import json

    loaded = json.loads(path.read_text())
    assert loaded == {"x": 0.1, "arr": [0, 1, 2], "n": 7}

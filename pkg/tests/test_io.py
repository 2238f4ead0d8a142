import json
import math

from regime_sde import io


def test_fmt():
    assert io.fmt(0.1) == "1.0000000000000001e-01"
    assert float(io.fmt(1 / 3)) == 1 / 3
    assert io.fmt(3) == "3" and io.fmt(True) == "1"
    assert io.fmt(math.inf) == "inf" and io.fmt(-math.inf) == "-inf" and io.fmt(math.nan) == "nan"


def test_csv_round_trip(tmp_path):
    rows = [(0.0, 0.5, 1), (1e-300, 1 - 2 ** -53, 2)]
    p = tmp_path / "a.csv"
    io.write_csv(p, ("t", "phi", "regime"), rows)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,phi,regime"
    back = [tuple(float(v) for v in line.split(",")) for line in lines[1:]]
    assert back == [tuple(float(v) for v in r) for r in rows]


def test_json_clean(tmp_path):
    import numpy as np
    p = tmp_path / "a.json"
    io.write_json(p, {"a": math.inf, "b": [np.float64(0.25), math.nan], "c": (1, 2)})
    assert json.loads(p.read_text()) == {"a": "inf", "b": [0.25, None], "c": [1, 2]}

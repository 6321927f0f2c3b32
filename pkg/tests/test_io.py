import json
import math

import numpy as np
import pytest

from fnlslab import io
from fnlslab.spectral import Field, Grid, derive_params, gaussian


def test_snapshot_round_trip(tmp_path, p2):
    g = Grid(2, 16, 3.0)
    rng = np.random.default_rng(0)
    f = Field(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape), "noise")
    path = io.save_snapshot(tmp_path / "a.bin", f, p2, t=0.25)
    back, head = io.load_snapshot(path)
    assert np.array_equal(back.values, f.values)
    assert back.grid == g and back.tag == "noise"
    assert head == {"version": 1, "d": 2, "N": 16, "L": 3.0, "s": 0.75, "alpha": 2.4, "t": 0.25}
    side = json.loads(io.sidecar_path(path).read_text())
    assert side["magic"] == "FNLS" and side["order"] == "row-major"
    assert path.stat().st_size == 48 + 16 * 256


def test_snapshot_rejects_damage(tmp_path, p1):
    f = gaussian(Grid(1, 16, 2.0))
    path = io.save_snapshot(tmp_path / "b.bin", f, p1)
    raw = path.read_bytes()
    (tmp_path / "short.bin").write_bytes(raw[:20])
    (tmp_path / "magic.bin").write_bytes(b"XXXX" + raw[4:])
    (tmp_path / "cut.bin").write_bytes(raw[:-8])
    for name in ("short.bin", "magic.bin", "cut.bin"):
        with pytest.raises(io.SnapshotFormatError):
            io.load_snapshot(tmp_path / name)


def test_json_is_valid_and_sorted():
    s = io.dumps({"b": math.nan, "a": np.float64(1.5), "c": np.arange(2), "d": np.bool_(True)})
    obj = json.loads(s)
    assert list(obj) == ["a", "b", "c", "d"]
    assert obj == {"a": 1.5, "b": "nan", "c": [0, 1], "d": True}


def test_csv_round_trip_is_exact(tmp_path):
    rows = [[0.1, 1 / 3], [2.0, -1e-300]]
    io.write_csv(tmp_path / "x.csv", ["a", "b"], rows)
    head, arr = io.read_csv(tmp_path / "x.csv")
    assert head == ["a", "b"]
    assert arr.tolist() == rows

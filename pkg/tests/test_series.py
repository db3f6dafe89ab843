import json

import numpy as np
import pytest

from nonbark.series import HEADER, WeakValueSeries, emit_series, read_series


def sample():
    x = np.array([0.3, 0.1, 0.2])
    w = np.array([1 + 2j, -1e-300 + 3.3e200j, np.pi - 1j / 3])
    return WeakValueSeries("x", x, w, {"mode": "tunnel_closed", "params": {"b": 1.0, "k0": 5000.0}, "n": [1, 2]})


def test_sorted_by_coordinate():
    s = sample()
    assert list(s.coords) == [0.1, 0.2, 0.3]
    assert s.values[0] == -1e-300 + 3.3e200j


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_roundtrip_exact(tmp_path, fmt):
    s = sample()
    path = emit_series(s, tmp_path / "s", fmt)
    assert path.suffix == "." + fmt
    back = read_series(path)
    assert back.same_as(s)


def test_csv_layout(tmp_path):
    text = sample().to_csv()
    lines = text.splitlines()
    assert all(ln.startswith("#") for ln in lines[:3])
    assert lines[3] == HEADER
    first = lines[4].split(",")
    assert len(first) == 4
    assert first[0] == "0.10000000000000001"  # 17 significant digits
    meta = json.loads(lines[2].split(":", 1)[1])
    assert meta["params"]["k0"] == 5000.0


def test_json_structure():
    d = json.loads(sample().to_json())
    assert d["coord_label"] == "x"
    assert d["columns"] == ["coord", "re_w", "im_w", "abs_w"]
    assert len(d["samples"]) == 3 and len(d["samples"][0]) == 4


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_empty_series_header_only(tmp_path, fmt):
    s = WeakValueSeries("t", [], [], {"mode": "atom_decay"})
    path = emit_series(s, tmp_path / "e", fmt)
    text = path.read_text()
    if fmt == "csv":
        assert text.splitlines()[-1] == HEADER
    else:
        assert json.loads(text)["samples"] == []
    assert read_series(path).same_as(s)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        WeakValueSeries("y", [1], [1])
    with pytest.raises(ValueError):
        WeakValueSeries("x", [1, 2], [1])
    with pytest.raises(ValueError):
        WeakValueSeries("x", [1], [np.nan]).to_csv()


def test_peak():
    assert sample().peak() == (0.1, abs(-1e-300 + 3.3e200j))

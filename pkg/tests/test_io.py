import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from lightfront.io import read_csv, sha256_file, write_csv, write_json

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(col=arrays(np.float64, st.integers(1, 30), elements=finite))
def test_csv_round_trip_is_exact(tmp_path_factory, col):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_csv(path, {"a": col, "b": -col})
    back = read_csv(path)
    assert np.array_equal(back["a"], col) and np.array_equal(back["b"], -col)


def test_header_and_precision(tmp_path):
    path = write_csv(tmp_path / "x.csv", {"xi_um": [0.1], "s": [1 / 3]})
    lines = path.read_text().splitlines()
    assert lines[0] == "xi_um,s"
    assert lines[1] == "0.10000000000000001,0.33333333333333331"


def test_length_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", {"a": [1, 2], "b": [1]})


def test_json_sorted_and_nonfinite(tmp_path):
    path = write_json(tmp_path / "s.json", {"b": np.float64(np.nan), "a": np.arange(2),
                                            "c": np.bool_(True)})
    text = path.read_text()
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": [0, 1], "b": "nan", "c": True}
    assert len(sha256_file(path)) == 64

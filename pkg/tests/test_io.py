import json
from typing import NamedTuple

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varchoquard.io import dump, dumps, parse_config, read_config


class Pair(NamedTuple):
    a: float
    b: int


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_round_trip(x):
    assert json.loads(dumps({"x": x}))["x"] == x


def test_special_values():
    assert dumps([float("nan"), float("inf"), -float("inf")]) == "[NaN, Infinity, -Infinity]"
    data = json.loads(dumps({"v": float("nan")}))
    assert np.isnan(data["v"])


def test_numpy_and_namedtuple():
    obj = {"arr": np.array([1.0, 2.5]), "i": np.int64(3), "b": np.bool_(True), "t": Pair(0.1, 2)}
    data = json.loads(dumps(obj))
    assert data == {"arr": [1.0, 2.5], "i": 3, "b": True, "t": {"a": 0.1, "b": 2}}
    assert dumps(1.0) == "1.0"
    assert dumps(0.1) == "0.10000000000000001"


def test_unserializable():
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_dump_is_deterministic(tmp_path):
    obj = {"z": [1, 2], "a": {"k": None, "l": []}}
    dump(obj, tmp_path / "a.json")
    dump(obj, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert json.loads((tmp_path / "a.json").read_text()) == obj


def test_parse_config():
    text = "# comment\np.kind = cosine\n\np.base=2.0  # trailing\nr.expr = 1 + x / 2\n"
    assert parse_config(text) == {"p.kind": "cosine", "p.base": "2.0", "r.expr": "1 + x / 2"}


@pytest.mark.parametrize("text", ["novalue\n", "a = 1\na = 2\n", "bad key = 1\n", " = 3\n"])
def test_parse_config_errors(text):
    with pytest.raises(ValueError, match="<config>:"):
        parse_config(text)


def test_read_config(tmp_path):
    (tmp_path / "c.cfg").write_text("seed = 4\n")
    assert read_config(tmp_path / "c.cfg") == {"seed": "4"}

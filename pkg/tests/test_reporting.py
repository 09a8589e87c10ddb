import dataclasses
import json
import math

import numpy as np
import pytest

from rdlab.reporting import check, jsonable, summarize, write_csv, write_json


def test_jsonable_handles_numpy_scalars_and_arrays():
    out = jsonable(
        {
            "a": np.float64(0.1),
            "b": np.int32(3),
            "c": np.bool_(True),
            "d": np.array([1.5, 2.5]),
            "e": (1, 2),
            "f": None,
        }
    )
    assert out == {"a": 0.1, "b": 3, "c": True, "d": [1.5, 2.5], "e": [1, 2], "f": None}
    assert isinstance(out["a"], float) and isinstance(out["b"], int)


def test_jsonable_nonfinite_floats_become_strings():
    out = jsonable({"x": math.inf, "y": math.nan, "z": np.float64("-inf")})
    assert out == {"x": "inf", "y": "nan", "z": "-inf"}
    # the whole thing must survive strict JSON
    json.loads(json.dumps(out, allow_nan=False))


def test_jsonable_dataclass_prefers_to_dict():
    @dataclasses.dataclass
    class WithTo:
        a: int
        b: int

        def to_dict(self):
            return {"a": self.a}

    assert jsonable(WithTo(1, 2)) == {"a": 1}

    @dataclasses.dataclass
    class Plain:
        a: int

    assert jsonable(Plain(5)) == {"a": 5}


def test_jsonable_rejects_unknown_types():
    with pytest.raises(TypeError):
        jsonable(object())


def test_write_json_sorted_and_stable(tmp_path):
    payload = {"zeta": 1, "alpha": {"y": 2.0, "x": np.array([3.0])}}
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    write_json(p1, payload)
    write_json(p2, dict(reversed(list(payload.items()))))
    b1, b2 = p1.read_bytes(), p2.read_bytes()
    assert b1 == b2
    assert b1.endswith(b"\n") and b"\r" not in b1
    text = p1.read_text()
    assert text.index("alpha") < text.index("zeta")


def test_write_csv_round_trip_floats(tmp_path):
    path = tmp_path / "sweep.csv"
    write_csv(path, ["t", "value", "ok"], [[0.1, 1 / 3, True], [0.2, np.float64(2.0), False]])
    lines = path.read_text().splitlines()
    assert lines[0] == "t,value,ok"
    assert lines[1] == f"0.1,{1 / 3!r},true"
    assert lines[2] == "0.2,2.0,false"
    assert float(lines[1].split(",")[1]) == 1 / 3  # shortest repr round-trips


def test_check_and_summarize():
    checks = [check("one", True, margin=0.5), check("two", False, witness=3)]
    assert checks[0] == {"name": "one", "passed": True, "margin": 0.5}
    s = summarize(checks)
    assert s == {"n_checks": 2, "n_failed": 1, "passed": False}
    assert summarize([])["passed"] is True

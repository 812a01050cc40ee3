from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mmsumm import errors, report

scalars = st.none() | st.booleans() | st.integers(-10**12, 10**12) | st.floats(allow_nan=False, allow_infinity=False) | st.text()
trees = st.recursive(scalars, lambda c: st.lists(c, max_size=4) | st.dictionaries(st.text(max_size=5), c, max_size=4),
                     max_leaves=20)


class TestFormatFloat:
    @pytest.mark.parametrize("x, s", [(1.0, "1.0"), (0.1, "0.10000000000000001"), (1e20, "1e+20"),
                                      (-0.0, "-0.0"), (2.5e-7, "2.4999999999999999e-07")])
    def test_examples(self, x, s):
        assert report.format_float(x) == s

    @pytest.mark.parametrize("x", [math.nan, math.inf, -math.inf])
    def test_non_finite(self, x):
        with pytest.raises(errors.NonFinite):
            report.dumps({"x": x})


class TestDumps:
    @given(trees)
    def test_round_trip_exact(self, tree):
        text = report.dumps(tree)
        assert report.loads(text) == tree
        assert report.dumps(report.loads(text)) == text

    @given(st.dictionaries(st.text(max_size=4), st.integers(), max_size=6))
    def test_key_order_irrelevant(self, d):
        rev = dict(reversed(list(d.items())))
        assert report.dumps(d) == report.dumps(rev)

    def test_floats_stay_floats(self):
        assert isinstance(report.loads(report.dumps([3.0]))[0], float)

    def test_numpy_values(self):
        r = {"a": np.float32(0.5), "b": np.arange(3), "c": np.array([[1.5]]), "d": np.bool_(True)}
        assert report.loads(report.dumps(r)) == {"a": 0.5, "b": [0, 1, 2], "c": [[1.5]], "d": True}

    def test_layout(self):
        assert report.dumps({"b": [1, 2], "a": {}}) == '{\n  "a": {},\n  "b": [\n    1,\n    2\n  ]\n}\n'
        assert report.dumps({"b": 1, "a": "é"}, indent=0) == '{"a":"é","b":1}\n'

    def test_valid_json(self):
        json.loads(report.dumps({"x": [1.0, None, "q\n"]}))

    def test_rejects_unknown(self):
        with pytest.raises(TypeError):
            report.dumps({"x": object()})
        with pytest.raises(TypeError):
            report.dumps({1: 2})

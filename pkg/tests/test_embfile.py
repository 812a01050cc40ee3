from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmsumm import embfile, errors


class TestRoundTrip:
    def test_header_layout(self):
        data = embfile.encode(np.ones((2, 3)))
        assert data[:4] == b"MHEB"
        assert struct.unpack("<IQQ", data[4:24]) == (1, 2, 3)
        assert len(data) == 24 + 2 * 3 * 4

    def test_vector_is_one_row(self):
        assert embfile.decode(embfile.encode([1.0, 2.0])).shape == (1, 2)

    def test_empty_matrix(self):
        assert embfile.decode(embfile.encode(np.zeros((0, 4)))).shape == (0, 4)

    @given(arrays(np.float32, st.tuples(st.integers(0, 6), st.integers(0, 6)),
                  elements=st.floats(width=32, allow_nan=False)))
    def test_bytes_exact(self, x):
        y = embfile.decode(embfile.encode(x))
        assert y.dtype == np.float32
        np.testing.assert_array_equal(y, x)

    def test_file(self, tmp_path):
        x = np.arange(6, dtype=np.float32).reshape(3, 2)
        embfile.write_embeddings(x, tmp_path / "e.mheb")
        np.testing.assert_array_equal(embfile.read_embeddings(tmp_path / "e.mheb"), x)
        assert not (tmp_path / "e.mheb.tmp").exists()

    def test_not_2d(self):
        with pytest.raises(errors.ShapeMismatch):
            embfile.encode(np.zeros((2, 2, 2)))


class TestCorruption:
    good = embfile.encode(np.ones((2, 2)))

    @pytest.mark.parametrize("data, exc", [
        (b"MHE", errors.TruncatedPayload),
        (b"XXXX" + good[4:], errors.BadMagic),
        (good[:4] + struct.pack("<I", 2) + good[8:], errors.VersionUnsupported),
        (good[:-1], errors.TruncatedPayload),
        (good + b"\0", errors.TrailingData),
    ])
    def test_rejected(self, data, exc):
        with pytest.raises(exc):
            embfile.decode(data)

    def test_path_in_error(self, tmp_path):
        p = tmp_path / "bad.mheb"
        p.write_bytes(b"nope")
        with pytest.raises(errors.TruncatedPayload, match="bad.mheb"):
            embfile.read_embeddings(p)

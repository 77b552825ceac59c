import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from codedptycho._validation import DimensionError
from codedptycho.fileio import (
    FormatError,
    atomic_write,
    decode_image,
    decode_stack,
    encode_image,
    encode_stack,
    read_image,
    read_stack,
    write_image,
    write_json,
    write_stack,
)

from conftest import random_complex


@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_image_roundtrip(rows, cols, seed):
    x = random_complex(np.random.default_rng(seed), (rows, cols))
    np.testing.assert_array_equal(decode_image(encode_image(x)), x)


def test_image_layout():
    x = np.array([[1 + 2j, 3 - 4j]])
    data = encode_image(x)
    assert data[:8] == b"CPTY0001"
    assert struct.unpack("<II", data[8:16]) == (1, 2)
    assert struct.unpack("<4d", data[16:]) == (1.0, 2.0, 3.0, -4.0)


def test_stack_kinds(rng):
    cplx = random_complex(rng, (3, 5, 5))
    mod = np.abs(cplx)
    dc, dm = encode_stack(cplx), encode_stack(mod)
    assert dc[:8] == b"CPTYSTK1" and struct.unpack("<IIIB", dc[8:21]) == (3, 5, 5, 0)
    assert struct.unpack("<IIIB", dm[8:21]) == (3, 5, 5, 1)
    np.testing.assert_array_equal(decode_stack(dc), cplx)
    np.testing.assert_array_equal(decode_stack(dm), mod)
    assert decode_stack(dm).dtype == np.float64


def test_corrupt_inputs():
    good = encode_image(np.ones((2, 2)))
    with pytest.raises(FormatError):
        decode_image(b"XXXX" + good[4:])
    with pytest.raises(FormatError):
        decode_image(good[:-1])
    with pytest.raises(FormatError):
        decode_stack(good)
    with pytest.raises(DimensionError):
        encode_image(np.ones(3))
    with pytest.raises(DimensionError):
        encode_stack(np.ones((2, 2)))


def test_file_roundtrip(tmp_path, rng):
    x = random_complex(rng, (4, 4))
    write_image(tmp_path / "a" / "x.cpty", x)
    np.testing.assert_array_equal(read_image(tmp_path / "a" / "x.cpty"), x)
    write_stack(tmp_path / "s.stk", np.abs(x)[None])
    np.testing.assert_array_equal(read_stack(tmp_path / "s.stk")[0], np.abs(x))


def test_atomic_write_leaves_no_temp(tmp_path):
    atomic_write(tmp_path / "t.txt", "one")
    atomic_write(tmp_path / "t.txt", "two")
    assert (tmp_path / "t.txt").read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["t.txt"]


def test_json_is_sorted_and_numpy_aware(tmp_path):
    write_json(tmp_path / "o.json", {"b": np.float64(1.5), "a": np.arange(2)})
    text = (tmp_path / "o.json").read_text()
    assert json.loads(text) == {"a": [0, 1], "b": 1.5}
    assert text.index('"a"') < text.index('"b"')

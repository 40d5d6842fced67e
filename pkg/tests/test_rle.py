import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vtester import rle


@pytest.mark.parametrize("raw, tokens", [
    (b"", b""),
    (bytes(4), b"\x00\x04\x00"),
    (b"\x07\x00\x09", b"\x07\x00\x01\x00\x09"),
    (bytes(65535), b"\x00\xff\xff"),
    (bytes(65536), b"\x00\xff\xff\x00\x01\x00"),
])
def test_token_examples(rle_impl, raw, tokens):
    assert rle_impl.rle_compress(raw) == tokens
    assert rle_impl.rle_decompress(tokens) == raw


@pytest.mark.parametrize("bad", [b"\x00", b"\x00\x01", b"\x05\x00\x00\x00", b"\x00\x00\x00"])
def test_malformed_tokens(rle_impl, bad):
    with pytest.raises(ValueError):
        rle_impl.rle_decompress(bad)


def test_random_roundtrip_10k(rle_impl):
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        n = int(rng.integers(0, 200))
        # bias towards zeros so runs actually occur
        x = (rng.integers(0, 256, n) * (rng.random(n) < 0.5)).astype(np.uint8).tobytes()
        assert rle_impl.rle_decompress(rle_impl.rle_compress(x)) == x


@settings(max_examples=300)
@given(st.binary(max_size=4096))
def test_backends_agree(data):
    from vtester import _rle_py

    assert rle.rle_compress(data) == _rle_py.rle_compress(data)
    assert rle.rle_decompress(rle.rle_compress(data)) == data


def test_accepts_numpy_buffers(rle_impl):
    arr = np.zeros(10, dtype=np.uint8)
    arr[3] = 9
    assert rle_impl.rle_decompress(rle_impl.rle_compress(arr.tobytes())) == arr.tobytes()

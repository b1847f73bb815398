import io

import numpy as np
import pytest

from courtraster.tensorfile import TensorFileError, load_tensor, pack_tensor, save_tensor, unpack_tensor


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    arr = rng.standard_normal((3, 5, 7)).astype(np.float32)
    path = tmp_path / "t.tnsr"
    save_tensor(path, arr)
    back = load_tensor(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, arr)
    # writing the loaded tensor again reproduces the same bytes
    assert pack_tensor(back) == path.read_bytes()


def test_shapes_preserved():
    for shape in [(1,), (4, 198), (2, 11, 94, 50)]:
        arr = np.arange(np.prod(shape), dtype=np.float32).reshape(shape)
        back = unpack_tensor(io.BytesIO(pack_tensor(arr)))
        assert back.shape == shape
        assert np.array_equal(back, arr)


def test_bad_magic_rejected():
    data = bytearray(pack_tensor(np.zeros(3, np.float32)))
    data[:4] = b"NOPE"
    with pytest.raises(TensorFileError, match="magic"):
        unpack_tensor(io.BytesIO(bytes(data)))


def test_truncated_payload_rejected():
    data = pack_tensor(np.zeros((2, 2), np.float32))
    with pytest.raises(TensorFileError, match="truncated"):
        unpack_tensor(io.BytesIO(data[:-3]))


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "t.tnsr"
    path.write_bytes(pack_tensor(np.zeros(2, np.float32)) + b"x")
    with pytest.raises(TensorFileError, match="trailing"):
        load_tensor(path)
